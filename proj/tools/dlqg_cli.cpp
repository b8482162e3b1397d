// Command-line front end: problem ingestion, gain synthesis, closed-loop
// simulation, and cross-pattern cost comparison.
//
// Exit codes: 0 success, 2 input/validation error, 3 numerical failure.
// Errors are reported as a single JSON object on stderr:
//   {"kind": "input" | "numerical", "message": "..."}.
// All numeric output is printed with up to 17 significant digits so that
// repeated runs with identical inputs produce byte-identical artifacts.

#include <CLI11.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlqg/evaluation.hpp"
#include "dlqg/filtering.hpp"
#include "dlqg/jsonio.hpp"
#include "dlqg/model.hpp"
#include "dlqg/riccati.hpp"
#include "dlqg/runtime.hpp"
#include "dlqg/synthesis.hpp"

namespace {

namespace evaluation = dlqg::evaluation;
namespace filtering = dlqg::filtering;
namespace jsonio = dlqg::jsonio;
namespace model = dlqg::model;
namespace riccati = dlqg::riccati;
namespace runtime = dlqg::runtime;
namespace synthesis = dlqg::synthesis;

// The comparison always covers the full pattern set, most informative last.
const std::vector<model::InformationPattern> kComparePatterns = {
    model::InformationPattern::ThreePlayer, model::InformationPattern::OneStepSharing,
    model::InformationPattern::CentralizedDelay0, model::InformationPattern::CentralizedDelay2};

std::string json_quote(const std::string& text) { return jsonio::json(text).dump(); }

void emit_error(const std::string& kind, const std::string& message) {
    std::cerr << "{\"kind\": " << json_quote(kind) << ", \"message\": " << json_quote(message)
              << "}\n";
}

void require_valid(const model::ProblemSpec& spec) {
    const model::ValidationReport report = model::validate(spec);
    if (!report.ok) {
        std::string joined = "problem validation failed:";
        for (const std::string& violation : report.violations) joined += " " + violation + ";";
        joined.pop_back();
        throw std::invalid_argument(joined);
    }
}

model::ProblemSpec load_and_validate(const std::string& problem_path) {
    model::ProblemSpec spec = model::load_problem_file(problem_path);
    require_valid(spec);
    return spec;
}

// Simulation samples from V but never inverts it (the zero-delay correction
// gains carry their own guard), so unlike synthesis it accepts a merely
// positive-semidefinite V; zero-measurement-noise replays are legitimate.
// Every other invariant is enforced at full strength by validating the
// problem with V swapped for the identity.
model::ProblemSpec load_for_simulation(const std::string& problem_path) {
    model::ProblemSpec spec = model::load_problem_file(problem_path);
    const double scale = 1.0 + spec.V.cwiseAbs().maxCoeff();
    if ((spec.V - spec.V.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw std::invalid_argument("problem validation failed: V must be symmetric");
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(spec.V, Eigen::EigenvaluesOnly);
    if (eigs.eigenvalues().minCoeff() < -1e-10 * scale)
        throw std::invalid_argument("problem validation failed: V must be positive semidefinite");
    model::ProblemSpec strict = spec;
    strict.V = Eigen::MatrixXd::Identity(spec.p(), spec.p());
    require_valid(strict);
    return spec;
}

std::filesystem::path ensure_out_dir(const std::string& out_dir) {
    std::filesystem::path dir(out_dir);
    try {
        std::filesystem::create_directories(dir);
    } catch (const std::filesystem::filesystem_error& error) {
        throw std::invalid_argument("cannot create output directory \"" + out_dir +
                                    "\": " + error.what());
    }
    return dir;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream file(path, std::ios::binary);
    file << content;
    file.flush();
    if (!file.good())
        throw std::invalid_argument("cannot write output file \"" + path.string() + "\"");
}

// Filtered correction gains Kf(k) = P(k)Cᵀ(CP(k)Cᵀ+V)⁻¹, needed when a loaded
// gain schedule is run under the zero-delay centralized pattern.
std::vector<Eigen::MatrixXd> filtered_gains(const model::ProblemSpec& spec,
                                            const filtering::FilterPass& fil) {
    std::vector<Eigen::MatrixXd> gains(static_cast<size_t>(spec.N));
    for (int k = 0; k < spec.N; ++k)
        gains[static_cast<size_t>(k)] =
            fil.Ytilde[static_cast<size_t>(k)].llt().solve(spec.C * fil.P[static_cast<size_t>(k)]).transpose();
    return gains;
}

int run_synth(const std::string& problem_path, const std::string& pattern_token,
              const std::string& out_dir) {
    const model::ProblemSpec spec = load_and_validate(problem_path);
    const model::InformationPattern pattern = model::parse_pattern(pattern_token);
    const std::filesystem::path dir = ensure_out_dir(out_dir);

    const runtime::Controller ctrl = runtime::make_controller(spec, pattern);
    const double expected = evaluation::expected_cost(spec, ctrl);
    const riccati::RiccatiPass ric = riccati::riccati_backward(spec);

    const std::filesystem::path gains_path = dir / "gains.json";
    write_file(gains_path, synthesis::control_law_to_json(ctrl.law));

    std::string summary = "{\n";
    summary += "  \"command\": \"synth\",\n";
    summary += "  \"pattern\": " + json_quote(model::pattern_name(pattern)) + ",\n";
    summary += "  \"N\": " + std::to_string(spec.N) + ",\n";
    summary += "  \"Jw\": " + jsonio::format_double(ric.Jw) + ",\n";
    summary += "  \"Jtilde\": " + jsonio::format_double(expected - ric.Jw) + ",\n";
    summary += "  \"expected_cost\": " + jsonio::format_double(expected) + ",\n";
    summary += "  \"gains_file\": " + json_quote(gains_path.string()) + "\n";
    summary += "}\n";
    std::cout << summary;
    return 0;
}

int run_compare(const std::string& problem_path, int runs, std::uint64_t seed,
                const std::string& out_dir) {
    if (runs < 1) throw std::invalid_argument("compare requires at least one Monte Carlo run");
    const model::ProblemSpec spec = load_and_validate(problem_path);
    const std::filesystem::path dir = ensure_out_dir(out_dir);

    const evaluation::CostReport report = evaluation::compare(spec, kComparePatterns, runs, seed);
    const std::string csv = evaluation::report_to_csv(report);
    const std::string json = evaluation::report_to_json(report);
    write_file(dir / "report.csv", csv);
    write_file(dir / "report.json", json);
    std::cout << json;
    return 0;
}

int run_simulate(const std::string& problem_path, const std::string& gains_path,
                 const std::string& pattern_token, std::uint64_t seed,
                 const std::string& out_dir) {
    const model::ProblemSpec spec = load_for_simulation(problem_path);
    const model::InformationPattern pattern = model::parse_pattern(pattern_token);
    const std::filesystem::path dir = ensure_out_dir(out_dir);

    runtime::Controller ctrl;
    ctrl.pattern = pattern;
    ctrl.law = synthesis::load_control_law(jsonio::slurp(gains_path));
    if (ctrl.law.N != spec.N)
        throw std::invalid_argument("gain schedule horizon " + std::to_string(ctrl.law.N) +
                                    " does not match problem horizon " + std::to_string(spec.N));
    if (ctrl.law.F[0].rows() != spec.q() || ctrl.law.F[0].cols() != spec.p() ||
        ctrl.law.L[0].cols() != spec.n())
        throw std::invalid_argument("gain schedule dimensions do not match the problem");
    // Only the zero-delay centralized law consumes Kf, and computing it needs
    // an invertible innovation covariance; degenerate-noise problems stay
    // simulable under every other pattern.
    if (pattern == model::InformationPattern::CentralizedDelay0)
        ctrl.Kf = filtered_gains(spec, filtering::filter_pass(spec));

    const runtime::Trajectory traj = runtime::simulate(spec, ctrl, seed);
    const std::filesystem::path traj_path = dir / "trajectory.csv";
    write_file(traj_path, runtime::trajectory_to_csv(traj, spec));

    std::string summary = "{\n";
    summary += "  \"command\": \"simulate\",\n";
    summary += "  \"pattern\": " + json_quote(model::pattern_name(pattern)) + ",\n";
    summary += "  \"seed\": " + std::to_string(seed) + ",\n";
    summary += "  \"cost\": " + jsonio::format_double(traj.cost) + ",\n";
    summary += "  \"trajectory_file\": " + json_quote(traj_path.string()) + "\n";
    summary += "}\n";
    std::cout << summary;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed delayed-sharing LQG: synthesis, simulation, comparison"};
    app.require_subcommand(1);

    std::string problem;
    std::string gains;
    std::string out_dir = ".";
    std::string pattern_token = "three-player";
    int runs = 500;
    std::uint64_t seed = 0;
    const std::string pattern_help =
        "information pattern: three-player, central-0, central-2, or one-step";

    CLI::App* synth = app.add_subcommand("synth", "Synthesize a gain schedule and write gains.json");
    synth->add_option("--problem", problem, "problem JSON file")->required();
    synth->add_option("--pattern", pattern_token, pattern_help)->capture_default_str();
    synth->add_option("--out", out_dir, "output directory")->capture_default_str();

    CLI::App* compare = app.add_subcommand(
        "compare", "Evaluate all four information patterns; write report.csv and report.json");
    compare->add_option("--problem", problem, "problem JSON file")->required();
    compare->add_option("--runs", runs, "Monte Carlo runs per pattern")->capture_default_str();
    compare->add_option("--seed", seed, "base seed for common random numbers")->capture_default_str();
    compare->add_option("--out", out_dir, "output directory")->capture_default_str();

    CLI::App* simulate = app.add_subcommand(
        "simulate", "Run one closed-loop realization of a saved gain schedule; write trajectory.csv");
    simulate->add_option("--problem", problem, "problem JSON file")->required();
    simulate->add_option("--gains", gains, "gain-schedule JSON file written by synth")->required();
    simulate->add_option("--pattern", pattern_token, pattern_help)->capture_default_str();
    simulate->add_option("--seed", seed, "simulation seed")->capture_default_str();
    simulate->add_option("--out", out_dir, "output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& error) {
        if (error.get_exit_code() == 0) return app.exit(error);  // --help
        emit_error("input", error.what());
        return 2;
    }

    try {
        if (app.got_subcommand(synth)) return run_synth(problem, pattern_token, out_dir);
        if (app.got_subcommand(compare)) return run_compare(problem, runs, seed, out_dir);
        return run_simulate(problem, gains, pattern_token, seed, out_dir);
    } catch (const std::invalid_argument& error) {
        emit_error("input", error.what());
        return 2;
    } catch (const std::runtime_error& error) {
        emit_error("numerical", error.what());
        return 3;
    }
}
