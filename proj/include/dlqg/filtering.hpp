#pragma once

#include <Eigen/Dense>

#include <vector>

#include <dlqg/model.hpp>

// Kalman covariance/gain recursions, the neighbor-restricted local gains, and
// the second-moment quantities of the local-estimate error.  Everything here
// is control-independent by construction: no operation takes an input
// history.

namespace dlqg::filtering {

struct FilterPass {
    // Standard one-step-prediction filter.
    std::vector<Eigen::MatrixXd> P;       // k = 0..N, error covariance of x̂(k|k−1); P(0) = P0
    std::vector<Eigen::MatrixXd> K;       // k = 0..N−1, gain A P Cᵀ Ỹ⁻¹
    std::vector<Eigen::MatrixXd> Ytilde;  // k = 0..N−1, innovation covariance C P Cᵀ + V

    // Neighbor-information filter: player i's row block uses only the block
    // outputs in its index set S_i.
    std::vector<Eigen::MatrixXd> K1;      // k = 0..N−1, neighbor-masked gains K^[1](k)
    std::vector<Eigen::MatrixXd> P1;      // k = 0..N−1, covariance of x − x̂^[1](k); P1(0) = P0
    std::vector<Eigen::MatrixXd> Y1;      // k = 0..N−1, C P^[1](k) Cᵀ + V
    std::vector<Eigen::MatrixXd> Ptilde;  // k = 0..N−1, E{(x−x̂^[1](k)) ỹ(k−1)ᵀ}; Ptilde(0) = 0
};

// Covariance recursion
//   P(k+1) = A P(k) Aᵀ + W − A P(k) Cᵀ (C P(k) Cᵀ + V)⁻¹ C P(k) Aᵀ,
// K(k) = A P(k) Cᵀ Ỹ(k)⁻¹, Ỹ(k) = C P(k) Cᵀ + V.  Throws std::runtime_error
// if some Ỹ(k) is numerically singular (violates the positive-definite
// measurement-noise requirement).
void kalman_pass(const model::ProblemSpec& spec, std::vector<Eigen::MatrixXd>& P,
                 std::vector<Eigen::MatrixXd>& K, std::vector<Eigen::MatrixXd>& Ytilde);

// Per-player restricted gains: with S_i the neighbor set of player i and S_t
// all players,
//   [K^[1](k)]_{i,S_i} = [A]_i [P(k)]_{S_t S_i} [C]_{S_iS_i}ᵀ
//       ([C]_{S_iS_i} [P(k)]_{S_iS_i} [C]_{S_iS_i}ᵀ + [V]_{S_iS_i})⁻¹,
// all other blocks exactly zero.  `neighbor_sets` defaults to the standard
// three-player sets; passing {{0,1,2},{0,1,2},{0,1,2}} reproduces K(k).
std::vector<Eigen::MatrixXd> local_gain_pass(const model::ProblemSpec& spec,
                                             const std::vector<Eigen::MatrixXd>& P);
std::vector<Eigen::MatrixXd> local_gain_pass(const model::ProblemSpec& spec,
                                             const std::vector<Eigen::MatrixXd>& P,
                                             const std::vector<std::vector<int>>& neighbor_sets);

// Second moments of the local-estimate error e^[1](k) = x(k) − x̂^[1](k):
// with ΔK(k−1) = K(k−1) − K^[1](k−1),
//   P^[1](k) = P(k) + ΔK(k−1) Ỹ(k−1) ΔK(k−1)ᵀ,
//   Ỹ^[1](k) = C P^[1](k) Cᵀ + V,
//   P̃(k)    = ΔK(k−1) Ỹ(k−1),
// with boundary values P^[1](0) = P0, Ỹ^[1](0) = C P0 Cᵀ + V, P̃(0) = 0.
void local_error_moments(const model::ProblemSpec& spec, const std::vector<Eigen::MatrixXd>& P,
                         const std::vector<Eigen::MatrixXd>& K,
                         const std::vector<Eigen::MatrixXd>& K1,
                         const std::vector<Eigen::MatrixXd>& Ytilde,
                         std::vector<Eigen::MatrixXd>& P1, std::vector<Eigen::MatrixXd>& Y1,
                         std::vector<Eigen::MatrixXd>& Ptilde);

// All of the above in dependency order.
FilterPass filter_pass(const model::ProblemSpec& spec);

}  // namespace dlqg::filtering
