#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "dlqg/model.hpp"
#include "dlqg/runtime.hpp"

// Expected-cost analysis and the controller comparison harness.  The analytic
// route never touches the random number generator: it extracts the
// controller's linear step maps by basis probing, propagates the joint
// plant/controller covariance forward, and accumulates the quadratic cost in
// expectation.  The Monte Carlo route reuses runtime::simulate on common
// random numbers so that cost ratios between patterns are sharp.
namespace dlqg::evaluation {

struct CostRow {
    model::InformationPattern pattern = model::InformationPattern::ThreePlayer;
    double analytic_expected_cost = 0.0;
    double mc_mean = 0.0;
    double mc_stderr = 0.0;
    int runs = 0;
};

// Scale-free pairwise comparison, e.g. label "three-player / one-step".
struct CostRatio {
    std::string label;
    double value = 0.0;
};

struct CostReport {
    int N = 0;  // horizon, so consumers can derive per-step values
    std::vector<CostRow> rows;
    std::vector<CostRatio> ratios;
};

// E{J} for the closed loop of `ctrl` on `spec`, computed by covariance
// propagation.  Each step's probed maps are exact (the controllers are
// linear), the joint covariance is symmetrized and checked PSD each step, and
// for the three-player pattern the result is cross-checked against the
// independent decomposition Jw + J̃(F, F¹) to 1e−6 relative; disagreement
// throws std::runtime_error, as does a covariance that loses positive
// semidefiniteness.
double expected_cost(const model::ProblemSpec& spec, const runtime::Controller& ctrl);

// Realized costs of `runs` independent simulations with seeds seed+0..runs−1.
// Honors the THREADS environment variable (default 1); the returned vector is
// identical regardless of thread count, and downstream reductions are
// order-fixed, so reports are bit-reproducible.
std::vector<double> mc_costs(const model::ProblemSpec& spec, const runtime::Controller& ctrl,
                             int runs, std::uint64_t seed);

// Deterministic pairwise-summation mean and standard error of the mean.
void mean_and_stderr(const std::vector<double>& values, double& mean, double& stderr_mean);

// Synthesize every requested pattern, evaluate analytically and by Monte
// Carlo on common random numbers, and tabulate pairwise analytic cost ratios.
// A synthesis failure is rethrown with the offending pattern named.
CostReport compare(const model::ProblemSpec& spec,
                   const std::vector<model::InformationPattern>& patterns, int runs,
                   std::uint64_t seed);

// CSV with header pattern,analytic,mc_mean,mc_stderr,runs (ratio rows live in
// the JSON form, which also carries per-step values).
std::string report_to_csv(const CostReport& report);
std::string report_to_json(const CostReport& report);

}  // namespace dlqg::evaluation
