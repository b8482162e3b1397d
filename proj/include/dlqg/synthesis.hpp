#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "dlqg/filtering.hpp"
#include "dlqg/model.hpp"
#include "dlqg/riccati.hpp"
#include "dlqg/tensorops.hpp"

// Synthesis of the three-player output-feedback gains.  After the control and
// estimation passes, the remaining freedom is the innovation gains F(k)
// (block-diagonal) and F¹(k) (neighbor-masked).  Their optimal values solve a
// positive-definite quadratic program whose Hessian is block tridiagonal in
// the stage variables
//
//   ζ(k) = [ξ₁(k−1); ξ₂(k)]  for k = 1..N−1,   ζ(N) = ξ₁(N−1),
//
// where ξ₁(k) stacks the free blocks of F(k) and ξ₂(k) those of F¹(k)
// (column-major block order, see tensorops::column_major_order).  This module
// assembles that QP, solves it by a backward/forward block recursion, checks
// it against a dense stacked solve, derives the measurement-feedforward gains
// G(k), and computes the one-step-delay baseline gains.
namespace dlqg::synthesis {

// The quadratic program  Φ(ζ) = Σ_k ½ζ(k)ᵀZ1(k)ζ(k) + ζ(k)ᵀZ2(k)ζ(k+1) − ζ(k)ᵀb(k).
//
// Φ(ζ) equals the expected-cost correction J̃(ζ) minus its value at ζ = 0, so
// the minimiser of Φ is the optimal gain schedule and the optimal expected
// cost is Jw + Φ(ζ*) + jtilde_constant(...).  Sequences are stored with
// 1-based stage indices to match the ζ numbering: entry [k] is stage k and
// entry [0] is unused.  Z1 runs k = 1..N, Z2 k = 1..N−1, b k = 1..N.
struct QpAssembly {
    tensorops::SelectorMatrix E1;  // selector for block-diagonal F blocks
    tensorops::SelectorMatrix E2;  // selector for neighbor-masked F¹ blocks
    Eigen::MatrixXd E;             // blockdiag(E1, E2): [vec F(k−1); vec F¹(k)] = E·ζ(k)
    std::vector<Eigen::MatrixXd> Z1;
    std::vector<Eigen::MatrixXd> Z2;
    std::vector<Eigen::VectorXd> b;
    std::vector<int> dims;  // dims[k] = length of ζ(k); cols(E1)+cols(E2), except cols(E1) at k = N

    std::vector<int> q_sizes;  // input block sizes, kept for unpacking ζ into gains
    std::vector<int> p_sizes;  // measurement block sizes
};

// Optimal innovation-gain schedule and the recursion state that produced it.
// F runs k = 0..N−1.  F1 and G are defined for k = 1..N−1; index 0 holds an
// exact-zero matrix (there is no y(−1), so the k = 0 control is u(0) = F(0)y(0)).
// R and c use the same 1-based stage indexing as QpAssembly.
struct GainSchedule {
    std::vector<Eigen::MatrixXd> F;   // block-diagonal, k = 0..N−1
    std::vector<Eigen::MatrixXd> F1;  // neighbor-masked, [0] ≡ 0
    std::vector<Eigen::MatrixXd> G;   // neighbor-masked, [0] ≡ 0; filled by derive_G
    std::vector<Eigen::MatrixXd> R;   // backward recursion Hessians, k = 1..N, PD
    std::vector<Eigen::VectorXd> c;   // backward recursion linear terms, k = 1..N
    double Jtilde_opt = 0.0;          // Φ(ζ*) = −½ Σ_k b(k)ᵀζ*(k); excludes the ζ-independent constant
};

// Everything a controller needs at run time, independent of how it was
// synthesised; serialises to/from a standalone JSON document.
struct ControlLaw {
    int N = 0;
    std::vector<Eigen::MatrixXd> F;   // k = 0..N−1
    std::vector<Eigen::MatrixXd> F1;  // k = 0..N−1, [0] ≡ 0
    std::vector<Eigen::MatrixXd> G;   // k = 0..N−1, [0] ≡ 0
    std::vector<Eigen::MatrixXd> L;   // k = 0..N−1
    std::vector<Eigen::MatrixXd> K;   // k = 0..N−1
    std::vector<Eigen::MatrixXd> K1;  // k = 0..N−1
};

// Build Z1/Z2/b from the control and estimation passes.
//
//   Z1(k) = 2·Eᵀ M(k)ᵀ blockdiag(Ỹ¹(k−1)⊗H(k−1), Ỹ(k−1)⊗H(k)) M(k) E,
//           M(k) = [[I, 0], [−I⊗L(k)B, I]],          k = 1..N−1
//   Z1(N) = 2·E1ᵀ (Ỹ¹(N−1)⊗H(N−1)) E1
//   Z2(k) = 2·Eᵀ [−I⊗L(k)B, I]ᵀ (P̃(k)ᵀCᵀ ⊗ H(k)) [I 0] E   (E1 in place of
//           [I 0]E at k = N−1), the coupling through E{ỹ¹(k) ỹ(k−1)ᵀ} = CP̃(k)
//   b(k)  = all terms of −∇J̃ that are constant in ζ; four families per stage
//           (see the stage expansion in jtilde_value).
//
// The factor 2 makes ½ζᵀZ1ζ + ... reproduce J̃ exactly rather than up to
// scale, which is what the finite-difference tests check.  Throws
// std::invalid_argument on dimension inconsistencies and std::runtime_error
// if some Z1(k) fails its positive-definiteness check (tolerance 1e−10).
QpAssembly assemble_qp(const model::ProblemSpec& spec, const riccati::RiccatiPass& ric,
                       const filtering::FilterPass& fil);

// Minimise Φ by block elimination:
//   R(N) = Z1(N), c(N) = b(N);
//   R(k) = Z1(k) − Z2(k)R(k+1)⁻¹Z2(k)ᵀ,  c(k) = b(k) − Z2(k)R(k+1)⁻¹c(k+1);
//   ζ(1) = R(1)⁻¹c(1),  ζ(k+1) = −R(k+1)⁻¹(Z2(k)ᵀζ(k) − c(k+1)),
// then unpack ζ into F(k−1) and F¹(k) through the selector column maps.
// Throws std::runtime_error if any R(k) is not PD (an assembly bug: the
// backward recursion preserves positive definiteness).
GainSchedule solve_gains(const QpAssembly& assembly);

// G(k) = F¹(k) − F(k)C(K¹(k−1) + BF(k−1)) for k = 1..N−1; G(0) = 0.  The
// result provably conforms to the neighbor mask; off-pattern mass beyond
// 1e−10 throws std::runtime_error (inconsistent gains), and conforming
// results are projected to exact zeros.
std::vector<Eigen::MatrixXd> derive_G(const GainSchedule& gains, const model::ProblemSpec& spec,
                                      const filtering::FilterPass& fil);

// Baseline gains for the one-step-delay sharing pattern: at each k, F(k)
// minimises Tr{H(k)FỸ(k)Fᵀ} − 2Tr{H(k)F C P(k) L(k)ᵀ} over `mask`-conforming
// F (normal equations through the selector), giving the controller
// u(k) = L(k)x̂(k|k−1) + F(k)ỹ(k).  The default mask is the per-player
// (block-diagonal) one; the full mask recovers the centralized one-step law
// F(k) = L(k)P(k)Cᵀ(CP(k)Cᵀ+V)⁻¹.
std::vector<Eigen::MatrixXd> onestep_gains(const model::ProblemSpec& spec,
                                           const riccati::RiccatiPass& ric,
                                           const filtering::FilterPass& fil,
                                           const tensorops::SparsityMask& mask =
                                               tensorops::SparsityMask::diagonal());

// Verification oracle: stack all ζ(k), assemble the dense symmetric
// block-tridiagonal Hessian and linear term, and solve the whole QP in one
// factorization.  Returns ζ(1..N) with the same 1-based indexing.  Throws
// std::runtime_error if the stacked Hessian is not PD.
std::vector<Eigen::VectorXd> dense_qp_oracle(const QpAssembly& assembly);

// Φ(ζ) for an externally supplied ζ sequence (1-based, matching dims).
double qp_objective(const QpAssembly& assembly, const std::vector<Eigen::VectorXd>& zeta);

// The expected-cost correction evaluated directly from its stage expansion:
//
//   J̃ = Σ_{k=0}^{N−1} E‖F(k)ỹ¹(k) + D(k)ỹ(k−1) − L(k)e¹(k)‖²_{H(k)},
//   D(k) = F¹(k) − L(k)K¹(k−1) − L(k)BF(k−1),  D(0) = 0,
//
// expanded through the error moments Ỹ¹, Ỹ, P¹, P̃ (no QP matrices involved;
// this is the independent route the assembly is tested against).  F1[0] is
// ignored.  Requires F of length N and F1 of length N.
double jtilde_value(const model::ProblemSpec& spec, const riccati::RiccatiPass& ric,
                    const filtering::FilterPass& fil, const std::vector<Eigen::MatrixXd>& F,
                    const std::vector<Eigen::MatrixXd>& F1);

// The ζ-independent part of J̃ (its value at F ≡ 0, F¹ ≡ 0), from the closed
// form Σ_k Tr{H L P¹ Lᵀ} + Σ_{k≥1} (Tr{H L K¹ Ỹ₋ K¹ᵀ Lᵀ} + 2 Tr{H L K¹ P̃ᵀ Lᵀ}).
// Expected three-player cost = riccati Jw + GainSchedule::Jtilde_opt + this.
double jtilde_constant(const model::ProblemSpec& spec, const riccati::RiccatiPass& ric,
                       const filtering::FilterPass& fil);

// Bundle the synthesised schedule with the pass gains a controller replays.
ControlLaw make_control_law(const model::ProblemSpec& spec, const GainSchedule& gains,
                            const riccati::RiccatiPass& ric, const filtering::FilterPass& fil);

// JSON document {N, F, F1, G, L, K, K1} with row-major matrices printed to 17
// significant digits; load(control_law_to_json(law)) round-trips bit-exactly.
// F1 and G are stored for k = 1..N−1 (the identically-zero k = 0 entries are
// reconstructed on load).  load_control_law throws std::invalid_argument on
// malformed documents, unknown fields, or shape mismatches.
std::string control_law_to_json(const ControlLaw& law);
ControlLaw load_control_law(const std::string& json_text);

}  // namespace dlqg::synthesis
