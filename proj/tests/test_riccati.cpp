#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <dlqg/model.hpp>
#include <dlqg/riccati.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using dlqg::model::canonical_example;
using dlqg::model::ProblemSpec;
using dlqg::riccati::riccati_backward;
using dlqg::riccati::RiccatiPass;

namespace {

// Three decoupled unit subsystems: every coordinate is the scalar problem
// A=B=1, Qxx=Quu=Q0=1, Qxu=0.
ProblemSpec decoupled_unit(int horizon) {
    ProblemSpec spec = canonical_example();
    spec.A = Eigen::MatrixXd::Identity(3, 3);
    spec.Qxx = Eigen::MatrixXd::Identity(3, 3);
    spec.Qxu = Eigen::MatrixXd::Zero(3, 3);
    spec.Quu = Eigen::MatrixXd::Identity(3, 3);
    spec.Q0 = Eigen::MatrixXd::Identity(3, 3);
    spec.N = horizon;
    return spec;
}

// A mildly damped neighbor-coupled instance; keeps Monte Carlo variance low.
ProblemSpec damped_instance(int horizon) {
    ProblemSpec spec = canonical_example();
    spec.A << 0.9, 0.0, 0.2,
              0.3, 0.9, 0.0,
              0.0, 0.1, 0.8;
    spec.N = horizon;
    return spec;
}

}  // namespace

TEST_CASE("one-step hand computation on decoupled unit subsystems") {
    const RiccatiPass pass = riccati_backward(decoupled_unit(1));
    const Eigen::Matrix3d eye = Eigen::Matrix3d::Identity();
    CHECK((pass.H[0] - 2.0 * eye).cwiseAbs().maxCoeff() <= 1e-14);
    // Minimizing gain: u*(0) = L(0)x(0) must oppose the state.
    CHECK((pass.L[0] - (-0.5) * eye).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((pass.S[0] - 1.5 * eye).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((pass.S[1] - eye).cwiseAbs().maxCoeff() == 0.0);
    // Jw = Tr{S(0)P0} + Tr{S(1)W} with P0 = W = I.
    CHECK(pass.Jw == doctest::Approx(4.5 + 3.0).epsilon(1e-14));
}

TEST_CASE("zero state cost gives zero S and L") {
    ProblemSpec spec = canonical_example();
    spec.N = 20;
    spec.Qxx.setZero();
    spec.Qxu.setZero();
    spec.Q0.setZero();
    spec.Quu = Eigen::MatrixXd::Identity(3, 3);
    const RiccatiPass pass = riccati_backward(spec);
    for (const auto& s : pass.S) CHECK(s.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& l : pass.L) CHECK(l.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& h : pass.H) CHECK((h - spec.Quu).cwiseAbs().maxCoeff() == 0.0);
    CHECK(pass.Jw == 0.0);
}

TEST_CASE("long-horizon value matrix reaches the recursion's fixed point") {
    const ProblemSpec spec = canonical_example();
    const RiccatiPass pass = riccati_backward(spec);
    REQUIRE(static_cast<int>(pass.S.size()) == spec.N + 1);

    // Independent fixed-point oracle: iterate the one-step map until it
    // stops moving.
    const Eigen::MatrixXd& a = spec.A;
    const Eigen::MatrixXd& b = spec.B;
    Eigen::MatrixXd s = spec.Q0;
    for (int iter = 0; iter < 200000; ++iter) {
        const Eigen::MatrixXd h = b.transpose() * s * b + spec.Quu;
        const Eigen::MatrixXd cross = a.transpose() * s * b + spec.Qxu;
        const Eigen::MatrixXd next = a.transpose() * s * a + spec.Qxx -
                                     cross * h.llt().solve(cross.transpose());
        const double move = (0.5 * (next + next.transpose()) - s).cwiseAbs().maxCoeff();
        s = 0.5 * (next + next.transpose());
        if (move <= 1e-14 * std::max(1.0, s.cwiseAbs().maxCoeff())) break;
    }
    const double rel = (pass.S[0] - s).cwiseAbs().maxCoeff() / s.cwiseAbs().maxCoeff();
    CHECK(rel <= 1e-8);
}

TEST_CASE("value matrices are symmetric PSD and Hessians PD") {
    ProblemSpec spec = canonical_example();
    spec.N = 50;
    const RiccatiPass pass = riccati_backward(spec);
    CHECK((pass.S[spec.N] - spec.Q0).cwiseAbs().maxCoeff() == 0.0);
    for (const auto& s : pass.S) {
        CHECK((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(s, Eigen::EigenvaluesOnly);
        CHECK(eigs.eigenvalues().minCoeff() >= -1e-10);
    }
    for (const auto& h : pass.H) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(h, Eigen::EigenvaluesOnly);
        CHECK(eigs.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("with zero terminal weight the value grows with the horizon") {
    std::mt19937 rng(777);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_matrix = [&](int r, int c) {
        Eigen::MatrixXd m(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = gauss(rng);
        return m;
    };

    for (int instance = 0; instance < 5; ++instance) {
        ProblemSpec spec = canonical_example();
        Eigen::MatrixXd a = random_matrix(3, 3);
        a(0, 1) = a(1, 2) = a(2, 0) = 0.0;  // keep the neighbor pattern
        spec.A = a;
        // Random PSD stacked cost weight, with the input block nudged PD.
        const Eigen::MatrixXd m = random_matrix(6, 6);
        const Eigen::MatrixXd g = m.transpose() * m;
        spec.Qxx = g.topLeftCorner(3, 3);
        spec.Qxu = g.topRightCorner(3, 3);
        spec.Quu = g.bottomRightCorner(3, 3) + 0.1 * Eigen::MatrixXd::Identity(3, 3);
        spec.Q0.setZero();
        REQUIRE(dlqg::model::validate(spec).ok);

        double prev_trace = -1.0;
        for (int horizon = 1; horizon <= 8; ++horizon) {
            spec.N = horizon;
            const RiccatiPass pass = riccati_backward(spec);
            const double trace = pass.S[0].trace();
            CHECK(trace >= prev_trace - 1e-10);
            prev_trace = trace;
        }
    }
}

// The realized cost of ANY causal input sequence decomposes as
//   J = Σ (u−Lx)ᵀH(u−Lx) + x(0)ᵀS(0)x(0)
//       + Σ [2w(k)ᵀS(k+1)(Ax(k)+Bu(k)) + w(k)ᵀS(k+1)w(k)],
// pathwise, and the expectation of the non-(u−Lx) part is Jw.  This pins the
// sign convention of L: the decomposition fails for the sign-flipped gain.
TEST_CASE("pathwise cost decomposition and its expectation") {
    const int horizon = 6;
    const ProblemSpec spec = damped_instance(horizon);
    const RiccatiPass pass = riccati_backward(spec);

    std::mt19937 rng(2024);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto randn = [&](int len) {
        Eigen::VectorXd v(len);
        for (int i = 0; i < len; ++i) v(i) = gauss(rng);
        return v;
    };

    // Arbitrary causal output feedback, deliberately not optimal.
    const Eigen::MatrixXd gamma =
        0.2 * Eigen::MatrixXd::Identity(3, 3) + 0.05 * Eigen::MatrixXd::Ones(3, 3);
    const Eigen::MatrixXd delta = -0.1 * Eigen::MatrixXd::Identity(3, 3);

    const int runs = 80000;
    double sum_r = 0.0, sum_r2 = 0.0;
    for (int run = 0; run < runs; ++run) {
        Eigen::VectorXd x = randn(3);  // P0 = I
        Eigen::VectorXd y_prev = Eigen::VectorXd::Zero(3);
        double cost = 0.0, control_part = 0.0, noise_part = x.dot(pass.S[0] * x);
        for (int k = 0; k < horizon; ++k) {
            const Eigen::VectorXd y = spec.C * x + randn(3);
            const Eigen::VectorXd u = gamma * y + delta * y_prev;
            const Eigen::VectorXd w = randn(3);

            cost += x.dot(spec.Qxx * x) + 2.0 * x.dot(spec.Qxu * u) + u.dot(spec.Quu * u);
            const Eigen::VectorXd residual = u - pass.L[k] * x;
            control_part += residual.dot(pass.H[k] * residual);
            const Eigen::VectorXd drift = spec.A * x + spec.B * u;
            noise_part += 2.0 * w.dot(pass.S[k + 1] * drift) + w.dot(pass.S[k + 1] * w);

            x = drift + w;
            y_prev = y;
        }
        cost += x.dot(spec.Q0 * x);

        if (run < 200) {
            // Exact per-realization identity.
            CHECK(std::abs(cost - control_part - noise_part) <= 1e-8 * (1.0 + std::abs(cost)));
        }
        const double remainder = cost - control_part;
        sum_r += remainder;
        sum_r2 += remainder * remainder;
    }
    const double mean = sum_r / runs;
    const double variance = (sum_r2 - runs * mean * mean) / (runs - 1);
    const double stderr_mean = std::sqrt(variance / runs);
    INFO("mean remainder ", mean, " vs Jw ", pass.Jw, " stderr ", stderr_mean);
    CHECK(std::abs(mean - pass.Jw) <= 3.0 * stderr_mean);
    // The window itself must be informative on this scale.
    CHECK(3.0 * stderr_mean < 0.05 * pass.Jw);
}

TEST_CASE("ill-conditioned input cost is a hard numerical error") {
    ProblemSpec spec = canonical_example();
    spec.N = 3;
    spec.B.setZero();
    spec.Quu = Eigen::Vector3d(1.0, 1.0, 1e-13).asDiagonal();
    CHECK_THROWS_AS(riccati_backward(spec), std::runtime_error);
}
