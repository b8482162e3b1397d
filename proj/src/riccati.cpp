#include <dlqg/riccati.hpp>

#include <dlqg/tensorops.hpp>

#include <stdexcept>
#include <string>

namespace dlqg::riccati {

namespace {
constexpr double kConditionLimit = 1e12;
}

RiccatiPass riccati_backward(const model::ProblemSpec& spec) {
    const int n = spec.n();
    const int q = spec.q();
    const int horizon = spec.N;
    if (spec.A.rows() != n || spec.A.cols() != n || spec.B.rows() != n || spec.B.cols() != q ||
        spec.Qxx.rows() != n || spec.Qxu.cols() != q || spec.Quu.rows() != q ||
        spec.Q0.rows() != n || horizon < 1)
        throw std::invalid_argument("riccati_backward: inconsistent problem dimensions");

    RiccatiPass pass;
    pass.S.resize(horizon + 1);
    pass.H.resize(horizon);
    pass.L.resize(horizon);
    pass.S[horizon] = tensorops::symmetric_part(spec.Q0);

    for (int k = horizon - 1; k >= 0; --k) {
        const Eigen::MatrixXd& s_next = pass.S[k + 1];
        Eigen::MatrixXd h =
            tensorops::symmetric_part(spec.B.transpose() * s_next * spec.B + spec.Quu);

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(h, Eigen::EigenvaluesOnly);
        const double lambda_min = eigs.eigenvalues().minCoeff();
        const double lambda_max = eigs.eigenvalues().maxCoeff();
        if (lambda_min <= 0.0 || lambda_max > kConditionLimit * lambda_min)
            throw std::runtime_error(
                "riccati_backward: input-cost Hessian H(" + std::to_string(k) +
                ") is numerically singular; the problem violates the positive-definite "
                "input-cost requirement");

        const Eigen::MatrixXd cross = spec.A.transpose() * s_next * spec.B + spec.Qxu;
        // u*(k) = L(k) x(k) minimizes the stage-to-go cost; note the sign.
        pass.L[k] = -h.llt().solve(cross.transpose());
        pass.S[k] = tensorops::symmetric_part(spec.A.transpose() * s_next * spec.A + spec.Qxx +
                                              cross * pass.L[k]);
        pass.H[k] = std::move(h);
    }

    pass.Jw = (pass.S[0] * spec.P0).trace();
    for (int k = 0; k < horizon; ++k) pass.Jw += (pass.S[k + 1] * spec.W).trace();
    return pass;
}

}  // namespace dlqg::riccati
