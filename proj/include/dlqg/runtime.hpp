#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dlqg/model.hpp"
#include "dlqg/synthesis.hpp"

// Online controller state machines for the four information patterns, and the
// plant simulator that drives them.  Everything here is deterministic: noise
// comes from a counter-based generator keyed by (seed, time, stream, index),
// so two controllers simulated with the same seed see identical realizations
// (common random numbers), and repeated runs are bit-identical.
namespace dlqg::runtime {

// Rolling controller memory.  All vectors are zero at k = 0 (estimates start
// at x̂(0|−1) = 0 and there is no earlier input or measurement).
//
// Field use by pattern — three-player: xhat_local = x̂¹(k) (shared-information
// estimate), ytilde_prev = ỹ(k−1), xhat_delayed = x̂(k−1|k−2) (kept for the
// static-form identity and diagnostics; the step itself reads only
// xhat_local, ytilde_prev, and k).  Centralized d=2: xhat_delayed =
// x̂(k−1|k−2), u_prev = u(k−1), ytilde_prev = ỹ(k−1).  Centralized d=0 and
// one-step sharing: xhat_delayed holds the current prediction x̂(k|k−1).
struct ControllerState {
    Eigen::VectorXd xhat_delayed;
    Eigen::VectorXd xhat_local;
    Eigen::VectorXd u_prev;
    Eigen::VectorXd u_prev2;
    Eigen::VectorXd ytilde_prev;
    int k = 0;
};

ControllerState initial_state(const model::ProblemSpec& spec);

// One closed-loop realization.  x runs k = 0..N, u and y run k = 0..N−1;
// cost is the realized Σ [x;u]ᵀQ[x;u] + x(N)ᵀQ0x(N), recomputable from the
// stored sequences.
struct Trajectory {
    std::vector<Eigen::VectorXd> x;
    std::vector<Eigen::VectorXd> u;
    std::vector<Eigen::VectorXd> y;
    double cost = 0.0;
};

// A synthesized controller ready to run: the pattern tag, the gain schedule,
// and the filtered correction gains Kf(k) = P(k)Cᵀ(CP(k)Cᵀ+V)⁻¹ that the
// zero-delay centralized law needs on top of the shared schedule.
struct Controller {
    model::InformationPattern pattern = model::InformationPattern::ThreePlayer;
    synthesis::ControlLaw law;
    std::vector<Eigen::MatrixXd> Kf;
};

// Run the passes and synthesize the gains appropriate for `pattern`.
Controller make_controller(const model::ProblemSpec& spec, model::InformationPattern pattern);

// One step of the delayed-sharing optimal controller.  With ỹ(k−1) and x̂¹(k)
// from the state:
//   x̂(k|k−1) = x̂¹(k) + (K(k−1) − K¹(k−1))ỹ(k−1)
//   x̂(k)     = x̂¹(k) − (BF(k−1) + K¹(k−1))ỹ(k−1)
//   u(k)      = F(k)(y(k) − Cx̂¹(k)) + F¹(k)ỹ(k−1) + L(k)x̂(k)
//   ỹ(k)      = y(k) − Cx̂(k|k−1)
//   x̂¹(k+1)  = Ax̂(k|k−1) + Bu(k) + K¹(k)ỹ(k)
// Only xhat_local, ytilde_prev, and k are read from the state; the returned
// state carries x̂(k|k−1) in xhat_delayed for diagnostics.  Throws
// std::invalid_argument when k is outside the horizon.
std::pair<Eigen::VectorXd, ControllerState> three_player_step(const ControllerState& state,
                                                              const Eigen::Ref<const Eigen::VectorXd>& y_k,
                                                              const model::ProblemSpec& spec,
                                                              const Controller& ctrl);

// Centralized LQG with measurement delay d ∈ {0, 2}.
//   d=0: u(k) = L(k)(x̂(k|k−1) + Kf(k)ỹ(k)) — filtered estimate, then the
//        prediction advances through the standard filter.
//   d=2: u(k) = L(k)x̂(k|k−2) with x̂(k|k−2) = Ax̂(k−1|k−2) + Bu(k−1); the
//        filter absorbs each measurement two steps after it was taken.
// Throws std::invalid_argument for any other d or k outside the horizon.
std::pair<Eigen::VectorXd, ControllerState> centralized_delay_step(const ControllerState& state,
                                                                   const Eigen::Ref<const Eigen::VectorXd>& y_k,
                                                                   int d,
                                                                   const model::ProblemSpec& spec,
                                                                   const Controller& ctrl);

// One-step-delay sharing baseline: all players know y(0:k−1), each corrects
// with its own current innovation component through the block-diagonal F:
//   u(k) = L(k)x̂(k|k−1) + F(k)ỹ(k),  ỹ(k) = y(k) − Cx̂(k|k−1),
// and the shared prediction advances through the standard filter.
std::pair<Eigen::VectorXd, ControllerState> onestep_step(const ControllerState& state,
                                                         const Eigen::Ref<const Eigen::VectorXd>& y_k,
                                                         const model::ProblemSpec& spec,
                                                         const Controller& ctrl);

// Dispatch on ctrl.pattern.
std::pair<Eigen::VectorXd, ControllerState> controller_step(const ControllerState& state,
                                                            const Eigen::Ref<const Eigen::VectorXd>& y_k,
                                                            const model::ProblemSpec& spec,
                                                            const Controller& ctrl);

// Deterministic counter-based Gaussian draw.  The 64-bit counter word is
// built by chaining a SplitMix64-style finalizer over (seed, k, stream,
// index); two finalized words give uniforms u1, u2 ∈ (0,1] via the top 53
// bits, and the draw is the Box–Muller cosine branch √(−2 ln u1)·cos(2πu2).
// The transform is fixed so independent reimplementations can reproduce the
// distributions exactly.  Streams: 0 = initial state, 1 = process noise,
// 2 = measurement noise.
double normal_draw(std::uint64_t seed, int k, int stream, int index);
Eigen::VectorXd normal_vector(std::uint64_t seed, int k, int stream, int dim);

// Symmetric PSD square root Σ^½ = U·diag(√λ)·Uᵀ (eigenvalues clamped at 0;
// genuinely indefinite input throws std::runtime_error).  Used to color the
// unit-variance draws, and tolerant of singular covariances.
Eigen::MatrixXd covariance_sqrt(const Eigen::Ref<const Eigen::MatrixXd>& sigma);

// Roll out the closed loop for the whole horizon with x(0) ~ N(0, P0),
// w ~ N(0, W), v ~ N(0, V) from the counter generator.  Identical seeds give
// bit-identical trajectories.
Trajectory simulate(const model::ProblemSpec& spec, const Controller& ctrl, std::uint64_t seed);

// CSV export: header k, x1..xn, u1..uq, y1..yp, stage_cost, one row per step.
// The terminal row (k = N) has zeros in the u and y columns and carries the
// terminal cost x(N)ᵀQ0x(N) in stage_cost.
std::string trajectory_to_csv(const Trajectory& traj, const model::ProblemSpec& spec);

}  // namespace dlqg::runtime
