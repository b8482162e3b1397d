#include <dlqg/runtime.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include <dlqg/filtering.hpp>
#include <dlqg/jsonio.hpp>
#include <dlqg/riccati.hpp>

namespace dlqg::runtime {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// SplitMix64 finalizer; the standard avalanche constants.
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// One fully mixed word per (seed, k, stream, index) counter tuple.
std::uint64_t counter_word(std::uint64_t seed, int k, int stream, int index) {
    std::uint64_t z = mix64(seed);
    z = mix64(z + static_cast<std::uint64_t>(k));
    z = mix64(z + static_cast<std::uint64_t>(stream));
    return mix64(z + static_cast<std::uint64_t>(index));
}

// Top 53 bits, shifted into (0, 1] so the logarithm below is always finite.
double uniform_from_word(std::uint64_t word) {
    return (static_cast<double>(word >> 11) + 1.0) * 0x1.0p-53;
}

void check_step_inputs(const ControllerState& state, const Eigen::Ref<const VectorXd>& y_k,
                       const model::ProblemSpec& spec, const Controller& ctrl) {
    if (state.k < 0 || state.k >= spec.N)
        throw std::invalid_argument("controller stepped outside the horizon (k = " +
                                    std::to_string(state.k) + ", N = " + std::to_string(spec.N) +
                                    ")");
    if (y_k.size() != spec.p())
        throw std::invalid_argument("measurement dimension does not match the problem");
    if (ctrl.law.N != spec.N)
        throw std::invalid_argument("control law horizon does not match the problem");
}

double stage_cost(const model::ProblemSpec& spec, const VectorXd& x, const VectorXd& u) {
    return x.dot(spec.Qxx * x) + 2.0 * x.dot(spec.Qxu * u) + u.dot(spec.Quu * u);
}

}  // namespace

ControllerState initial_state(const model::ProblemSpec& spec) {
    ControllerState state;
    state.xhat_delayed = VectorXd::Zero(spec.n());
    state.xhat_local = VectorXd::Zero(spec.n());
    state.u_prev = VectorXd::Zero(spec.q());
    state.u_prev2 = VectorXd::Zero(spec.q());
    state.ytilde_prev = VectorXd::Zero(spec.p());
    state.k = 0;
    return state;
}

Controller make_controller(const model::ProblemSpec& spec, model::InformationPattern pattern) {
    const riccati::RiccatiPass ric = riccati::riccati_backward(spec);
    const filtering::FilterPass fil = filtering::filter_pass(spec);
    const auto un = static_cast<size_t>(spec.N);

    Controller ctrl;
    ctrl.pattern = pattern;
    ctrl.Kf.resize(un);
    for (size_t k = 0; k < un; ++k) {
        // Kf = P Cᵀ Ỹ⁻¹, the filtered-update gain (K = A·Kf).
        ctrl.Kf[k] =
            fil.Ytilde[k].llt().solve(spec.C * fil.P[k]).transpose();
    }

    switch (pattern) {
        case model::InformationPattern::ThreePlayer: {
            const synthesis::QpAssembly qp = synthesis::assemble_qp(spec, ric, fil);
            const synthesis::GainSchedule gains = synthesis::solve_gains(qp);
            ctrl.law = synthesis::make_control_law(spec, gains, ric, fil);
            break;
        }
        case model::InformationPattern::OneStepSharing: {
            ctrl.law.N = spec.N;
            ctrl.law.F = synthesis::onestep_gains(spec, ric, fil);
            ctrl.law.F1.assign(un, MatrixXd::Zero(spec.q(), spec.p()));
            ctrl.law.G.assign(un, MatrixXd::Zero(spec.q(), spec.p()));
            ctrl.law.L = ric.L;
            ctrl.law.K = fil.K;
            ctrl.law.K1 = fil.K1;
            break;
        }
        case model::InformationPattern::CentralizedDelay0:
        case model::InformationPattern::CentralizedDelay2: {
            ctrl.law.N = spec.N;
            ctrl.law.F.assign(un, MatrixXd::Zero(spec.q(), spec.p()));
            ctrl.law.F1.assign(un, MatrixXd::Zero(spec.q(), spec.p()));
            ctrl.law.G.assign(un, MatrixXd::Zero(spec.q(), spec.p()));
            ctrl.law.L = ric.L;
            ctrl.law.K = fil.K;
            ctrl.law.K1 = fil.K1;
            break;
        }
    }
    return ctrl;
}

std::pair<Eigen::VectorXd, ControllerState> three_player_step(
    const ControllerState& state, const Eigen::Ref<const Eigen::VectorXd>& y_k,
    const model::ProblemSpec& spec, const Controller& ctrl) {
    check_step_inputs(state, y_k, spec, ctrl);
    const int k = state.k;
    const auto ku = static_cast<size_t>(k);
    const synthesis::ControlLaw& law = ctrl.law;

    // Reads only xhat_local = x̂¹(k), ytilde_prev = ỹ(k−1), and k.
    VectorXd xpred = state.xhat_local;  // x̂(k|k−1)
    VectorXd xhat = state.xhat_local;   // x̂(k), the common-information estimate
    if (k >= 1) {
        xpred += (law.K[ku - 1] - law.K1[ku - 1]) * state.ytilde_prev;
        xhat -= (spec.B * law.F[ku - 1] + law.K1[ku - 1]) * state.ytilde_prev;
    }

    VectorXd u = law.F[ku] * (y_k - spec.C * state.xhat_local) + law.L[ku] * xhat;
    if (k >= 1) u += law.F1[ku] * state.ytilde_prev;

    const VectorXd ytilde = y_k - spec.C * xpred;

    ControllerState next;
    next.xhat_local = spec.A * xpred + spec.B * u + law.K1[ku] * ytilde;
    next.xhat_delayed = xpred;
    next.ytilde_prev = ytilde;
    next.u_prev = u;
    next.u_prev2 = state.u_prev;
    next.k = k + 1;
    return {u, next};
}

std::pair<Eigen::VectorXd, ControllerState> centralized_delay_step(
    const ControllerState& state, const Eigen::Ref<const Eigen::VectorXd>& y_k, int d,
    const model::ProblemSpec& spec, const Controller& ctrl) {
    if (d != 0 && d != 2) throw std::invalid_argument("measurement delay must be 0 or 2");
    check_step_inputs(state, y_k, spec, ctrl);
    const int k = state.k;
    const auto ku = static_cast<size_t>(k);
    const synthesis::ControlLaw& law = ctrl.law;

    ControllerState next;
    VectorXd u;
    if (d == 0) {
        // State carries x̂(k|k−1); correct with the current innovation, act,
        // then advance the prediction.
        const VectorXd ytilde = y_k - spec.C * state.xhat_delayed;
        u = law.L[ku] * (state.xhat_delayed + ctrl.Kf[ku] * ytilde);
        next = state;
        next.xhat_delayed = spec.A * state.xhat_delayed + spec.B * u + law.K[ku] * ytilde;
        next.ytilde_prev = ytilde;
        next.u_prev = u;
        next.u_prev2 = state.u_prev;
    } else {
        // State carries x̂(k−1|k−2) plus ỹ(k−1); the newest usable
        // measurement is two steps old.
        const VectorXd two_step = spec.A * state.xhat_delayed + spec.B * state.u_prev;
        u = law.L[ku] * two_step;  // x̂(k|k−2)
        VectorXd onestep = two_step;
        if (k >= 1) onestep += law.K[ku - 1] * state.ytilde_prev;  // x̂(k|k−1)
        next = state;
        next.xhat_delayed = onestep;
        next.ytilde_prev = y_k - spec.C * onestep;
        next.u_prev = u;
        next.u_prev2 = state.u_prev;
    }
    next.xhat_local = state.xhat_local;
    next.k = k + 1;
    return {u, next};
}

std::pair<Eigen::VectorXd, ControllerState> onestep_step(
    const ControllerState& state, const Eigen::Ref<const Eigen::VectorXd>& y_k,
    const model::ProblemSpec& spec, const Controller& ctrl) {
    check_step_inputs(state, y_k, spec, ctrl);
    const auto ku = static_cast<size_t>(state.k);
    const synthesis::ControlLaw& law = ctrl.law;

    // State carries the shared prediction x̂(k|k−1); each player adds its own
    // masked innovation correction.
    const VectorXd ytilde = y_k - spec.C * state.xhat_delayed;
    const VectorXd u = law.L[ku] * state.xhat_delayed + law.F[ku] * ytilde;

    ControllerState next = state;
    next.xhat_delayed = spec.A * state.xhat_delayed + spec.B * u + law.K[ku] * ytilde;
    next.ytilde_prev = ytilde;
    next.u_prev = u;
    next.u_prev2 = state.u_prev;
    next.k = state.k + 1;
    return {u, next};
}

std::pair<Eigen::VectorXd, ControllerState> controller_step(
    const ControllerState& state, const Eigen::Ref<const Eigen::VectorXd>& y_k,
    const model::ProblemSpec& spec, const Controller& ctrl) {
    switch (ctrl.pattern) {
        case model::InformationPattern::ThreePlayer:
            return three_player_step(state, y_k, spec, ctrl);
        case model::InformationPattern::CentralizedDelay0:
            return centralized_delay_step(state, y_k, 0, spec, ctrl);
        case model::InformationPattern::CentralizedDelay2:
            return centralized_delay_step(state, y_k, 2, spec, ctrl);
        case model::InformationPattern::OneStepSharing:
            return onestep_step(state, y_k, spec, ctrl);
    }
    throw std::invalid_argument("unknown information pattern");
}

double normal_draw(std::uint64_t seed, int k, int stream, int index) {
    constexpr double kTwoPi = 6.2831853071795864769;
    const double u1 = uniform_from_word(counter_word(seed, k, stream, 2 * index));
    const double u2 = uniform_from_word(counter_word(seed, k, stream, 2 * index + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

Eigen::VectorXd normal_vector(std::uint64_t seed, int k, int stream, int dim) {
    VectorXd z(dim);
    for (int i = 0; i < dim; ++i) z(i) = normal_draw(seed, k, stream, i);
    return z;
}

Eigen::MatrixXd covariance_sqrt(const Eigen::Ref<const Eigen::MatrixXd>& sigma) {
    if (sigma.rows() != sigma.cols()) throw std::invalid_argument("covariance must be square");
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(tensorops::symmetric_part(sigma));
    const VectorXd& lambda = eig.eigenvalues();
    const double worst = lambda.maxCoeff();
    if (lambda.minCoeff() < -1e-8 * (1.0 + std::abs(worst)))
        throw std::runtime_error("covariance is not positive semidefinite");
    return eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
           eig.eigenvectors().transpose();
}

Trajectory simulate(const model::ProblemSpec& spec, const Controller& ctrl, std::uint64_t seed) {
    const int N = spec.N;
    const MatrixXd root_p0 = covariance_sqrt(spec.P0);
    const MatrixXd root_w = covariance_sqrt(spec.W);
    const MatrixXd root_v = covariance_sqrt(spec.V);

    Trajectory traj;
    traj.x.reserve(static_cast<size_t>(N) + 1);
    traj.u.reserve(static_cast<size_t>(N));
    traj.y.reserve(static_cast<size_t>(N));

    VectorXd x = root_p0 * normal_vector(seed, 0, 0, spec.n());
    traj.x.push_back(x);
    ControllerState state = initial_state(spec);
    double cost = 0.0;
    for (int k = 0; k < N; ++k) {
        const VectorXd y = spec.C * x + root_v * normal_vector(seed, k, 2, spec.p());
        auto [u, next] = controller_step(state, y, spec, ctrl);
        traj.y.push_back(y);
        traj.u.push_back(u);
        cost += stage_cost(spec, x, u);
        x = spec.A * x + spec.B * u + root_w * normal_vector(seed, k, 1, spec.n());
        traj.x.push_back(x);
        state = std::move(next);
    }
    cost += x.dot(spec.Q0 * x);
    traj.cost = cost;
    return traj;
}

std::string trajectory_to_csv(const Trajectory& traj, const model::ProblemSpec& spec) {
    const int n = spec.n();
    const int q = spec.q();
    const int p = spec.p();
    std::string out = "k";
    for (int i = 1; i <= n; ++i) out += ",x" + std::to_string(i);
    for (int i = 1; i <= q; ++i) out += ",u" + std::to_string(i);
    for (int i = 1; i <= p; ++i) out += ",y" + std::to_string(i);
    out += ",stage_cost\n";

    const size_t steps = traj.u.size();
    for (size_t k = 0; k <= steps; ++k) {
        out += std::to_string(k);
        for (int i = 0; i < n; ++i) out += "," + jsonio::format_double(traj.x[k](i));
        if (k < steps) {
            for (int i = 0; i < q; ++i) out += "," + jsonio::format_double(traj.u[k](i));
            for (int i = 0; i < p; ++i) out += "," + jsonio::format_double(traj.y[k](i));
            out += "," + jsonio::format_double(stage_cost(spec, traj.x[k], traj.u[k]));
        } else {
            for (int i = 0; i < q + p; ++i) out += ",0";
            out += "," + jsonio::format_double(traj.x[k].dot(spec.Q0 * traj.x[k]));
        }
        out += "\n";
    }
    return out;
}

}  // namespace dlqg::runtime
