#pragma once

// Shared fixtures for the unit tests.

#include <Eigen/Dense>

#include <random>

#include <dlqg/model.hpp>
#include <dlqg/tensorops.hpp>

namespace test_support {

inline Eigen::VectorXd randn_vector(std::mt19937& rng, int len) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(len);
    for (int i = 0; i < len; ++i) v(i) = gauss(rng);
    return v;
}

inline Eigen::MatrixXd randn_matrix(std::mt19937& rng, int rows, int cols) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = gauss(rng);
    return m;
}

// A valid instance with unequal block sizes, non-identity B/C blocks, and a
// correlated (but masked) A; exercises every offset computation.
inline dlqg::model::ProblemSpec mixed_instance(int horizon) {
    dlqg::model::ProblemSpec spec;
    spec.partition.n = {2, 1, 2};
    spec.partition.q = {1, 2, 1};
    spec.partition.p = {2, 2, 1};
    const int n = spec.partition.n_total();
    const int q = spec.partition.q_total();
    const int p = spec.partition.p_total();
    spec.N = horizon;

    std::mt19937 rng(4242);
    Eigen::MatrixXd a = 0.15 * randn_matrix(rng, n, n);
    a.diagonal().array() += 0.8;
    spec.A = dlqg::tensorops::mask_project(a, dlqg::tensorops::SparsityMask::neighbor(),
                                           spec.partition.n_sizes(), spec.partition.n_sizes());

    spec.B = Eigen::MatrixXd::Zero(n, q);
    spec.B.block(0, 0, 2, 1) << 1.0, -0.4;
    spec.B.block(2, 1, 1, 2) << 0.7, 0.2;
    spec.B.block(3, 3, 2, 1) << 0.5, 1.1;

    spec.C = Eigen::MatrixXd::Zero(p, n);
    spec.C.block(0, 0, 2, 2) << 1.0, 0.3, -0.2, 0.9;
    spec.C.block(2, 2, 2, 1) << 1.0, 0.6;
    spec.C.block(4, 3, 1, 2) << 0.8, 0.5;

    auto spd = [&rng](int dim, double ridge) {
        Eigen::MatrixXd m = randn_matrix(rng, dim, dim);
        return Eigen::MatrixXd(m * m.transpose() / dim + ridge * Eigen::MatrixXd::Identity(dim, dim));
    };
    spec.W = spd(n, 0.3);
    spec.V = spd(p, 0.4);
    spec.P0 = spd(n, 0.2);
    spec.Qxx = spd(n, 0.1);
    spec.Qxu = Eigen::MatrixXd::Zero(n, q);
    spec.Quu = spd(q, 0.5);
    spec.Q0 = spd(n, 0.1);
    return spec;
}

inline std::vector<std::vector<int>> full_information_sets() {
    return {{0, 1, 2}, {0, 1, 2}, {0, 1, 2}};
}

}  // namespace test_support
