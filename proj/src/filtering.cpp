#include <dlqg/filtering.hpp>

#include <dlqg/tensorops.hpp>

#include <stdexcept>
#include <string>

namespace dlqg::filtering {

namespace {

constexpr double kConditionLimit = 1e12;

// PD factorization with a singularity guard; `what` names the matrix in the
// error message.
Eigen::LLT<Eigen::MatrixXd> guarded_llt(const Eigen::MatrixXd& m, const std::string& what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(m, Eigen::EigenvaluesOnly);
    const double lambda_min = eigs.eigenvalues().minCoeff();
    const double lambda_max = eigs.eigenvalues().maxCoeff();
    if (lambda_min <= 0.0 || lambda_max > kConditionLimit * lambda_min)
        throw std::runtime_error(what +
                                 " is numerically singular; the measurement-noise covariance "
                                 "must be positive definite");
    return m.llt();
}

}  // namespace

void kalman_pass(const model::ProblemSpec& spec, std::vector<Eigen::MatrixXd>& P,
                 std::vector<Eigen::MatrixXd>& K, std::vector<Eigen::MatrixXd>& Ytilde) {
    const int horizon = spec.N;
    P.assign(static_cast<size_t>(horizon) + 1, Eigen::MatrixXd());
    K.assign(static_cast<size_t>(horizon), Eigen::MatrixXd());
    Ytilde.assign(static_cast<size_t>(horizon), Eigen::MatrixXd());

    P[0] = tensorops::symmetric_part(spec.P0);
    for (int k = 0; k < horizon; ++k) {
        Ytilde[k] =
            tensorops::symmetric_part(spec.C * P[k] * spec.C.transpose() + spec.V);
        const auto llt =
            guarded_llt(Ytilde[k], "innovation covariance at step " + std::to_string(k));
        // K(k) = A P(k) Cᵀ Ỹ(k)⁻¹, obtained from the transposed solve.
        K[k] = llt.solve(spec.C * P[k] * spec.A.transpose()).transpose();
        P[k + 1] = tensorops::symmetric_part(spec.A * P[k] * spec.A.transpose() + spec.W -
                                             K[k] * Ytilde[k] * K[k].transpose());
    }
}

std::vector<Eigen::MatrixXd> local_gain_pass(const model::ProblemSpec& spec,
                                             const std::vector<Eigen::MatrixXd>& P) {
    return local_gain_pass(
        spec, P, {model::neighbor_set(0), model::neighbor_set(1), model::neighbor_set(2)});
}

std::vector<Eigen::MatrixXd> local_gain_pass(const model::ProblemSpec& spec,
                                             const std::vector<Eigen::MatrixXd>& P,
                                             const std::vector<std::vector<int>>& neighbor_sets) {
    if (neighbor_sets.size() != 3)
        throw std::invalid_argument("local_gain_pass: need one index set per player");

    const auto n_sizes = spec.partition.n_sizes();
    const auto p_sizes = spec.partition.p_sizes();
    const tensorops::BlockPartition a_part{n_sizes, n_sizes};
    const tensorops::BlockPartition c_part{p_sizes, n_sizes};
    const tensorops::BlockPartition v_part{p_sizes, p_sizes};
    const tensorops::BlockPartition gain_part{n_sizes, p_sizes};

    std::vector<Eigen::MatrixXd> gains;
    gains.reserve(P.size());
    for (size_t k = 0; k < P.size(); ++k) {
        Eigen::MatrixXd gain = Eigen::MatrixXd::Zero(spec.n(), spec.p());
        for (int player = 0; player < 3; ++player) {
            const auto& s = neighbor_sets[static_cast<size_t>(player)];
            const Eigen::MatrixXd a_row = tensorops::block_get(spec.A, a_part, {player}, {0, 1, 2});
            const Eigen::MatrixXd p_cols = tensorops::block_get(P[k], a_part, {0, 1, 2}, s);
            const Eigen::MatrixXd p_sub = tensorops::block_get(P[k], a_part, s, s);
            const Eigen::MatrixXd c_sub = tensorops::block_get(spec.C, c_part, s, s);
            const Eigen::MatrixXd v_sub = tensorops::block_get(spec.V, v_part, s, s);

            const Eigen::MatrixXd inner =
                tensorops::symmetric_part(c_sub * p_sub * c_sub.transpose() + v_sub);
            const auto llt = guarded_llt(inner, "restricted innovation covariance at step " +
                                                    std::to_string(k));
            const Eigen::MatrixXd rows =
                a_row * llt.solve(c_sub * p_cols.transpose()).transpose();

            int col = 0;
            for (int j : s) {
                const int width = p_sizes[static_cast<size_t>(j)];
                gain.block(gain_part.row_offset(player), gain_part.col_offset(j),
                           n_sizes[static_cast<size_t>(player)], width) =
                    rows.middleCols(col, width);
                col += width;
            }
        }
        gains.push_back(std::move(gain));
    }
    return gains;
}

void local_error_moments(const model::ProblemSpec& spec, const std::vector<Eigen::MatrixXd>& P,
                         const std::vector<Eigen::MatrixXd>& K,
                         const std::vector<Eigen::MatrixXd>& K1,
                         const std::vector<Eigen::MatrixXd>& Ytilde,
                         std::vector<Eigen::MatrixXd>& P1, std::vector<Eigen::MatrixXd>& Y1,
                         std::vector<Eigen::MatrixXd>& Ptilde) {
    const int horizon = spec.N;
    if (static_cast<int>(P.size()) < horizon || static_cast<int>(K.size()) < horizon ||
        static_cast<int>(K1.size()) < horizon || static_cast<int>(Ytilde.size()) < horizon)
        throw std::invalid_argument("local_error_moments: sequences shorter than the horizon");

    P1.assign(static_cast<size_t>(horizon), Eigen::MatrixXd());
    Y1.assign(static_cast<size_t>(horizon), Eigen::MatrixXd());
    Ptilde.assign(static_cast<size_t>(horizon), Eigen::MatrixXd());

    P1[0] = tensorops::symmetric_part(spec.P0);
    Y1[0] = tensorops::symmetric_part(spec.C * P1[0] * spec.C.transpose() + spec.V);
    Ptilde[0] = Eigen::MatrixXd::Zero(spec.n(), spec.p());
    for (int k = 1; k < horizon; ++k) {
        const Eigen::MatrixXd gap = K[k - 1] - K1[k - 1];
        P1[k] = tensorops::symmetric_part(P[k] +
                                          gap * Ytilde[k - 1] * gap.transpose());
        Y1[k] = tensorops::symmetric_part(spec.C * P1[k] * spec.C.transpose() + spec.V);
        Ptilde[k] = gap * Ytilde[k - 1];
    }
}

FilterPass filter_pass(const model::ProblemSpec& spec) {
    FilterPass pass;
    kalman_pass(spec, pass.P, pass.K, pass.Ytilde);
    const std::vector<Eigen::MatrixXd> p_head(pass.P.begin(), pass.P.end() - 1);
    pass.K1 = local_gain_pass(spec, p_head);
    local_error_moments(spec, pass.P, pass.K, pass.K1, pass.Ytilde, pass.P1, pass.Y1,
                        pass.Ptilde);
    return pass;
}

}  // namespace dlqg::filtering
