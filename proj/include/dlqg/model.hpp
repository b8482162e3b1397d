#pragma once

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include <dlqg/tensorops.hpp>

// Problem-instance definition for the three-subsystem delayed-sharing LQG
// problem, structural validation, and the canonical benchmark fixture.

namespace dlqg::model {

// Per-player state/input/output dimensions (three players).
struct Partition {
    std::array<int, 3> n{};  // state block sizes
    std::array<int, 3> q{};  // input block sizes
    std::array<int, 3> p{};  // output block sizes

    int n_total() const { return n[0] + n[1] + n[2]; }
    int q_total() const { return q[0] + q[1] + q[2]; }
    int p_total() const { return p[0] + p[1] + p[2]; }

    std::vector<int> n_sizes() const { return {n[0], n[1], n[2]}; }
    std::vector<int> q_sizes() const { return {q[0], q[1], q[2]}; }
    std::vector<int> p_sizes() const { return {p[0], p[1], p[2]}; }
};

// Time-invariant plant x(k+1) = A x(k) + B u(k) + w(k), y(k) = C x(k) + v(k),
// with finite-horizon quadratic cost
//   J = E{ Σ_{k<N} [x;u]ᵀ[[Qxx,Qxu],[Qxuᵀ,Quu]][x;u] + x(N)ᵀ Q0 x(N) }.
// Structure: A couples each subsystem to one upstream neighbor (neighbor
// mask), B and C are block diagonal.
struct ProblemSpec {
    Partition partition;
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd C;
    Eigen::MatrixXd W;   // process-noise covariance
    Eigen::MatrixXd V;   // measurement-noise covariance
    Eigen::MatrixXd P0;  // initial-state covariance
    int N = 0;           // horizon
    Eigen::MatrixXd Qxx;
    Eigen::MatrixXd Qxu;
    Eigen::MatrixXd Quu;
    Eigen::MatrixXd Q0;

    int n() const { return partition.n_total(); }
    int q() const { return partition.q_total(); }
    int p() const { return partition.p_total(); }
};

// Which measurements each input may use at time k.
enum class InformationPattern {
    ThreePlayer,        // own output now, neighbor outputs 1-step old, all 2 steps old
    CentralizedDelay0,  // every input sees y(0..k)
    CentralizedDelay2,  // every input sees y(0..k-2)
    OneStepSharing,     // every input sees own output now, all outputs 1 step old
};

std::string pattern_name(InformationPattern pattern);   // CLI token, e.g. "three-player"
InformationPattern parse_pattern(const std::string& token);  // throws std::invalid_argument

// Neighbor index set of player i (0-based): which block outputs player i sees
// with one-step delay.  S0={0,2}, S1={0,1}, S2={1,2}.
std::vector<int> neighbor_set(int player);

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> violations;
};

// Check the structural assumptions: sparsity patterns of A/B/C, symmetry and
// (semi)definiteness of the covariances and cost weights.  Dimension
// inconsistencies are a hard error (std::invalid_argument), not a report
// entry.  Eigenvalue tests use tolerance 1e-10.
ValidationReport validate(const ProblemSpec& spec);

// The canonical three-player benchmark instance: scalar subsystems,
//   A = [[2,0,1],[1,2,0],[0,1,2]],  B = C = W = V = P0 = I,
//   Qxx = [[3,1,1],[1,3,1],[1,1,3]], Qxu = [[1,0,-1],[-1,1,0],[0,-1,1]],
//   Quu = 2I, Q0 = Qxx, N = 1000.
// The initial-state covariance is not pinned down by the source problem
// statement; identity is used to match the unit-noise convention and can be
// overridden through problem files.
ProblemSpec canonical_example();

// JSON problem files: one object {partition:{n,q,p}, A, B, C, W, V, P0, N,
// Qxx, Qxu, Quu, Q0}, matrices as row-major nested arrays.  Unknown fields
// are rejected.  Parse errors and dimension mismatches throw
// std::invalid_argument.
ProblemSpec load_problem(const std::string& json_text);
ProblemSpec load_problem_file(const std::string& path);
std::string problem_to_json(const ProblemSpec& spec);

}  // namespace dlqg::model
