#include "dlqg/evaluation.hpp"

#include <Eigen/Eigenvalues>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <stdexcept>
#include <thread>
#include <utility>

#include "dlqg/filtering.hpp"
#include "dlqg/jsonio.hpp"
#include "dlqg/riccati.hpp"
#include "dlqg/synthesis.hpp"
#include "dlqg/tensorops.hpp"

namespace dlqg::evaluation {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// The propagated covariance must stay PSD up to roundoff; a larger violation
// means the probed step maps are wrong.
constexpr double kPsdSlack = 1e-8;
// Agreement demanded between the probed-propagation cost and the
// trace-decomposition cost for the delayed-sharing pattern.
constexpr double kCrossCheckTol = 1e-6;

// Controller memory layout for probing: every field of ControllerState in a
// fixed order.  Patterns that ignore a field simply produce zero columns.
int memory_dim(const model::ProblemSpec& spec) {
    return 2 * spec.n() + 2 * spec.q() + spec.p();
}

runtime::ControllerState unpack_state(const model::ProblemSpec& spec, const VectorXd& packed,
                                      int k) {
    const int n = spec.n(), q = spec.q(), p = spec.p();
    runtime::ControllerState state;
    state.xhat_delayed = packed.segment(0, n);
    state.xhat_local = packed.segment(n, n);
    state.u_prev = packed.segment(2 * n, q);
    state.u_prev2 = packed.segment(2 * n + q, q);
    state.ytilde_prev = packed.segment(2 * n + 2 * q, p);
    state.k = k;
    return state;
}

VectorXd pack_state(const model::ProblemSpec& spec, const runtime::ControllerState& state) {
    VectorXd packed(memory_dim(spec));
    packed << state.xhat_delayed, state.xhat_local, state.u_prev, state.u_prev2,
        state.ytilde_prev;
    return packed;
}

// u(k) = theta_s s + theta_y y,  s(k+1) = psi_s s + psi_y y.
struct StepMaps {
    MatrixXd theta_s, theta_y, psi_s, psi_y;
};

StepMaps probe_step(const model::ProblemSpec& spec, const runtime::Controller& ctrl, int k) {
    const int n = spec.n(), q = spec.q(), p = spec.p();
    const int m = memory_dim(spec);

    const auto step_at = [&](const VectorXd& packed, const VectorXd& y) {
        auto [u, next] = runtime::controller_step(unpack_state(spec, packed, k), y, spec, ctrl);
        return std::make_pair(std::move(u), pack_state(spec, next));
    };

    // The step must be linear: zero in, zero out, exactly.
    const auto [u_zero, s_zero] = step_at(VectorXd::Zero(m), VectorXd::Zero(p));
    if (u_zero.norm() != 0.0 || s_zero.norm() != 0.0)
        throw std::runtime_error("controller step at stage " + std::to_string(k) +
                                 " is not linear; cannot propagate covariances");

    StepMaps maps;
    maps.theta_s.resize(q, m);
    maps.psi_s.resize(m, m);
    for (int i = 0; i < m; ++i) {
        const auto [u, s_next] = step_at(VectorXd::Unit(m, i), VectorXd::Zero(p));
        maps.theta_s.col(i) = u;
        maps.psi_s.col(i) = s_next;
    }
    maps.theta_y.resize(q, p);
    maps.psi_y.resize(m, p);
    for (int j = 0; j < p; ++j) {
        const auto [u, s_next] = step_at(VectorXd::Zero(m), VectorXd::Unit(p, j));
        maps.theta_y.col(j) = u;
        maps.psi_y.col(j) = s_next;
    }
    return maps;
}

void check_psd(const MatrixXd& sigma, int k) {
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eigs(sigma, Eigen::EigenvaluesOnly);
    const double floor = -kPsdSlack * (1.0 + std::abs(sigma.trace()));
    if (eigs.eigenvalues().minCoeff() < floor)
        throw std::runtime_error("closed-loop covariance lost positive semidefiniteness at stage " +
                                 std::to_string(k));
}

int thread_count_from_env(int runs) {
    const char* raw = std::getenv("THREADS");
    if (raw == nullptr) return 1;
    int value = 0;
    const char* end = raw + std::strlen(raw);
    const auto [ptr, ec] = std::from_chars(raw, end, value);
    if (ec != std::errc() || ptr != end || value <= 0)
        throw std::invalid_argument("THREADS must be a positive integer, got \"" +
                                    std::string(raw) + "\"");
    return std::min({value, runs, 256});
}

// Fixed-shape pairwise reduction with a compensated base case: the result
// depends only on the contents of `data`, never on thread scheduling.
double pairwise_sum(const double* data, size_t count) {
    if (count <= 16) {
        double sum = 0.0, compensation = 0.0;
        for (size_t i = 0; i < count; ++i) {
            const double value = data[i];
            const double next = sum + value;
            if (std::abs(sum) >= std::abs(value))
                compensation += (sum - next) + value;
            else
                compensation += (value - next) + sum;
            sum = next;
        }
        return sum + compensation;
    }
    const size_t half = count / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, count - half);
}

std::string ratio_label(model::InformationPattern a, model::InformationPattern b) {
    return model::pattern_name(a) + " / " + model::pattern_name(b);
}

}  // namespace

double expected_cost(const model::ProblemSpec& spec, const runtime::Controller& ctrl) {
    const int n = spec.n(), q = spec.q();
    const int m = memory_dim(spec);

    // Joint covariance of [x(k); controller memory(k)]; the memory starts at
    // exactly zero, the plant at P0.
    MatrixXd sigma = MatrixXd::Zero(n + m, n + m);
    sigma.topLeftCorner(n, n) = spec.P0;

    double total = 0.0;
    for (int k = 0; k < spec.N; ++k) {
        const StepMaps maps = probe_step(spec, ctrl, k);

        // u(k) = U z(k) + theta_y v(k) with z = [x; s] and v independent of z.
        MatrixXd input_map(q, n + m);
        input_map << maps.theta_y * spec.C, maps.theta_s;
        const MatrixXd u_cov = input_map * sigma * input_map.transpose() +
                               maps.theta_y * spec.V * maps.theta_y.transpose();
        const MatrixXd ux_cross = (input_map * sigma).leftCols(n);  // E{u xᵀ}

        total += (spec.Qxx * sigma.topLeftCorner(n, n)).trace() +
                 2.0 * (spec.Qxu * ux_cross).trace() + (spec.Quu * u_cov).trace();

        // z(k+1) = T z(k) + [w; 0] + N v(k).
        MatrixXd transition(n + m, n + m);
        transition << spec.A + spec.B * maps.theta_y * spec.C, spec.B * maps.theta_s,
            maps.psi_y * spec.C, maps.psi_s;
        MatrixXd noise_map(n + m, spec.p());
        noise_map << spec.B * maps.theta_y, maps.psi_y;

        MatrixXd next = transition * sigma * transition.transpose() +
                        noise_map * spec.V * noise_map.transpose();
        next.topLeftCorner(n, n) += spec.W;
        sigma = tensorops::symmetric_part(next);
        check_psd(sigma, k + 1);
    }
    total += (spec.Q0 * sigma.topLeftCorner(n, n)).trace();

    if (ctrl.pattern == model::InformationPattern::ThreePlayer) {
        // Independent route: the control-dependent part of the cost is the
        // stage-wise trace expansion of J̃ at the controller's (F, F¹).
        double reference = 0.0;
        bool have_reference = false;
        try {
            const riccati::RiccatiPass ric = riccati::riccati_backward(spec);
            const filtering::FilterPass fil = filtering::filter_pass(spec);
            reference = ric.Jw + synthesis::jtilde_value(spec, ric, fil, ctrl.law.F, ctrl.law.F1);
            have_reference = true;
        } catch (const std::runtime_error&) {
            // Degenerate noise (e.g. singular innovation covariance) has no
            // trace route; the propagated value stands on its own.
        }
        if (have_reference &&
            std::abs(total - reference) > kCrossCheckTol * (1.0 + std::abs(reference)))
            throw std::runtime_error(
                "expected-cost routes disagree: covariance propagation gives " +
                jsonio::format_double(total) + ", trace decomposition gives " +
                jsonio::format_double(reference));
    }
    return total;
}

std::vector<double> mc_costs(const model::ProblemSpec& spec, const runtime::Controller& ctrl,
                             int runs, std::uint64_t seed) {
    if (runs <= 0) throw std::invalid_argument("Monte Carlo run count must be positive");
    const int threads = thread_count_from_env(runs);

    std::vector<double> costs(static_cast<size_t>(runs));
    const auto worker = [&](int lo, int hi) {
        for (int r = lo; r < hi; ++r)
            costs[static_cast<size_t>(r)] =
                runtime::simulate(spec, ctrl, seed + static_cast<std::uint64_t>(r)).cost;
    };
    if (threads == 1) {
        worker(0, runs);
        return costs;
    }

    const int chunk = (runs + threads - 1) / threads;
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(runs, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi, t] {
            try {
                worker(lo, hi);
            } catch (...) {
                failures[static_cast<size_t>(t)] = std::current_exception();
            }
        });
    }
    for (std::thread& thread : pool) thread.join();
    for (const std::exception_ptr& failure : failures)
        if (failure) std::rethrow_exception(failure);
    return costs;
}

void mean_and_stderr(const std::vector<double>& values, double& mean, double& stderr_mean) {
    const size_t count = values.size();
    if (count == 0) {
        mean = 0.0;
        stderr_mean = 0.0;
        return;
    }
    mean = pairwise_sum(values.data(), count) / static_cast<double>(count);
    if (count == 1) {
        stderr_mean = 0.0;
        return;
    }
    std::vector<double> squared(count);
    for (size_t i = 0; i < count; ++i) {
        const double deviation = values[i] - mean;
        squared[i] = deviation * deviation;
    }
    const double sum_squares = pairwise_sum(squared.data(), count);
    stderr_mean =
        std::sqrt(sum_squares / (static_cast<double>(count) * static_cast<double>(count - 1)));
}

CostReport compare(const model::ProblemSpec& spec,
                   const std::vector<model::InformationPattern>& patterns, int runs,
                   std::uint64_t seed) {
    if (patterns.empty()) throw std::invalid_argument("at least one information pattern is required");
    if (runs < 0) throw std::invalid_argument("Monte Carlo run count must be nonnegative");

    CostReport report;
    report.N = spec.N;
    for (model::InformationPattern pattern : patterns) {
        CostRow row;
        row.pattern = pattern;
        row.runs = runs;
        try {
            const runtime::Controller ctrl = runtime::make_controller(spec, pattern);
            row.analytic_expected_cost = expected_cost(spec, ctrl);
            if (runs > 0) {
                const std::vector<double> costs = mc_costs(spec, ctrl, runs, seed);
                mean_and_stderr(costs, row.mc_mean, row.mc_stderr);
            }
        } catch (const std::runtime_error& error) {
            throw std::runtime_error(model::pattern_name(pattern) + ": " + error.what());
        }
        report.rows.push_back(std::move(row));
    }
    for (size_t i = 0; i < report.rows.size(); ++i)
        for (size_t j = i + 1; j < report.rows.size(); ++j)
            report.ratios.push_back({ratio_label(report.rows[i].pattern, report.rows[j].pattern),
                                     report.rows[i].analytic_expected_cost /
                                         report.rows[j].analytic_expected_cost});
    return report;
}

std::string report_to_csv(const CostReport& report) {
    std::string out = "pattern,analytic,mc_mean,mc_stderr,runs\n";
    for (const CostRow& row : report.rows) {
        out += model::pattern_name(row.pattern) + ',' + jsonio::format_double(row.analytic_expected_cost) +
               ',' + jsonio::format_double(row.mc_mean) + ',' + jsonio::format_double(row.mc_stderr) +
               ',' + std::to_string(row.runs) + '\n';
    }
    return out;
}

std::string report_to_json(const CostReport& report) {
    const double steps = report.N > 0 ? static_cast<double>(report.N) : 1.0;
    std::string out = "{\n";
    out += "  \"N\": " + std::to_string(report.N) + ",\n";
    out += "  \"rows\": [";
    for (size_t i = 0; i < report.rows.size(); ++i) {
        const CostRow& row = report.rows[i];
        out += (i == 0 ? "\n" : ",\n");
        out += "    {\"pattern\": \"" + model::pattern_name(row.pattern) + "\"";
        out += ", \"analytic\": " + jsonio::format_double(row.analytic_expected_cost);
        out += ", \"analytic_per_step\": " +
               jsonio::format_double(row.analytic_expected_cost / steps);
        out += ", \"mc_mean\": " + jsonio::format_double(row.mc_mean);
        out += ", \"mc_stderr\": " + jsonio::format_double(row.mc_stderr);
        out += ", \"runs\": " + std::to_string(row.runs) + "}";
    }
    out += "\n  ],\n";
    out += "  \"ratios\": [";
    for (size_t i = 0; i < report.ratios.size(); ++i) {
        out += (i == 0 ? "\n" : ",\n");
        out += "    {\"label\": \"" + report.ratios[i].label + "\", \"value\": " +
               jsonio::format_double(report.ratios[i].value) + "}";
    }
    out += "\n  ]\n";
    out += "}\n";
    return out;
}

}  // namespace dlqg::evaluation
