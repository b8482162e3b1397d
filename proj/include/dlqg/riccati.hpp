#pragma once

#include <Eigen/Dense>

#include <vector>

#include <dlqg/model.hpp>

// Finite-horizon LQR backward recursion.  Produces the value matrices S(k),
// the input-cost Hessians H(k), the state-feedback gains L(k), and the
// control-independent part of the expected cost.

namespace dlqg::riccati {

struct RiccatiPass {
    std::vector<Eigen::MatrixXd> S;  // k = 0..N, S(N) = Q0; symmetric PSD
    std::vector<Eigen::MatrixXd> H;  // k = 0..N-1, H(k) = BᵀS(k+1)B + Quu; symmetric PD
    std::vector<Eigen::MatrixXd> L;  // k = 0..N-1, minimizing feedback u*(k) = L(k)x(k)
    double Jw = 0.0;                 // Tr{S(0)P0} + Σ_k Tr{S(k+1)W}; independent of the control
};

// Backward pass
//   S(N) = Q0,
//   H(k) = BᵀS(k+1)B + Quu,
//   L(k) = −H(k)⁻¹(BᵀS(k+1)A + Qxuᵀ),
//   S(k) = AᵀS(k+1)A + Qxx − (AᵀS(k+1)B + Qxu)H(k)⁻¹(BᵀS(k+1)A + Qxuᵀ).
// L carries the sign that makes u = L(k)x the cost minimizer, i.e. the
// realized cost of any input sequence decomposes as
//   J = Σ (u(k)−L(k)x(k))ᵀH(k)(u(k)−L(k)x(k)) + terms independent of u,
// and the expectation of the residual terms is Jw.
// S(k) is re-symmetrized each step.  Throws std::runtime_error if some H(k)
// is numerically singular (condition number above 1e12), which violates the
// positive-definite input-cost requirement.  Expects a validated spec.
RiccatiPass riccati_backward(const model::ProblemSpec& spec);

}  // namespace dlqg::riccati
