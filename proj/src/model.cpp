#include <dlqg/model.hpp>

#include <dlqg/jsonio.hpp>

#include <stdexcept>

namespace dlqg::model {

namespace {

constexpr double kEigTol = 1e-10;

void require_shape(const Eigen::MatrixXd& m, int rows, int cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols)
        throw std::invalid_argument(std::string(name) + " must be " + std::to_string(rows) + "x" +
                                    std::to_string(cols) + ", got " + std::to_string(m.rows()) +
                                    "x" + std::to_string(m.cols()));
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(0.5 * (m + m.transpose()),
                                                        Eigen::EigenvaluesOnly);
    return eigs.eigenvalues().minCoeff();
}

bool is_symmetric(const Eigen::MatrixXd& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= kEigTol;
}

}  // namespace

std::string pattern_name(InformationPattern pattern) {
    switch (pattern) {
        case InformationPattern::ThreePlayer: return "three-player";
        case InformationPattern::CentralizedDelay0: return "central-0";
        case InformationPattern::CentralizedDelay2: return "central-2";
        case InformationPattern::OneStepSharing: return "one-step";
    }
    throw std::invalid_argument("unknown information pattern");
}

InformationPattern parse_pattern(const std::string& token) {
    if (token == "three-player") return InformationPattern::ThreePlayer;
    if (token == "central-0") return InformationPattern::CentralizedDelay0;
    if (token == "central-2") return InformationPattern::CentralizedDelay2;
    if (token == "one-step") return InformationPattern::OneStepSharing;
    throw std::invalid_argument("unknown pattern \"" + token +
                                "\" (expected three-player, central-0, central-2, or one-step)");
}

std::vector<int> neighbor_set(int player) {
    switch (player) {
        case 0: return {0, 2};
        case 1: return {0, 1};
        case 2: return {1, 2};
    }
    throw std::invalid_argument("player index must be 0, 1, or 2");
}

ValidationReport validate(const ProblemSpec& spec) {
    for (int i = 0; i < 3; ++i) {
        if (spec.partition.n[i] < 1 || spec.partition.q[i] < 1 || spec.partition.p[i] < 1)
            throw std::invalid_argument("partition sizes must be positive");
    }
    if (spec.N < 1) throw std::invalid_argument("horizon N must be at least 1");

    const int n = spec.n();
    const int q = spec.q();
    const int p = spec.p();
    require_shape(spec.A, n, n, "A");
    require_shape(spec.B, n, q, "B");
    require_shape(spec.C, p, n, "C");
    require_shape(spec.W, n, n, "W");
    require_shape(spec.V, p, p, "V");
    require_shape(spec.P0, n, n, "P0");
    require_shape(spec.Qxx, n, n, "Qxx");
    require_shape(spec.Qxu, n, q, "Qxu");
    require_shape(spec.Quu, q, q, "Quu");
    require_shape(spec.Q0, n, n, "Q0");

    ValidationReport report;
    auto flag = [&report](const std::string& message) {
        report.ok = false;
        report.violations.push_back(message);
    };

    using tensorops::max_offpattern_abs;
    using tensorops::SparsityMask;
    const auto n_sizes = spec.partition.n_sizes();
    const auto q_sizes = spec.partition.q_sizes();
    const auto p_sizes = spec.partition.p_sizes();
    if (max_offpattern_abs(spec.A, SparsityMask::neighbor(), n_sizes, n_sizes) > 0.0)
        flag("A has nonzero entries outside the neighbor coupling pattern");
    if (max_offpattern_abs(spec.B, SparsityMask::diagonal(), n_sizes, q_sizes) > 0.0)
        flag("B must be block diagonal");
    if (max_offpattern_abs(spec.C, SparsityMask::diagonal(), p_sizes, n_sizes) > 0.0)
        flag("C must be block diagonal");

    struct SymCheck {
        const Eigen::MatrixXd* m;
        const char* name;
    };
    for (const auto& check : {SymCheck{&spec.W, "W"}, SymCheck{&spec.V, "V"},
                              SymCheck{&spec.P0, "P0"}, SymCheck{&spec.Qxx, "Qxx"},
                              SymCheck{&spec.Quu, "Quu"}, SymCheck{&spec.Q0, "Q0"}}) {
        if (!is_symmetric(*check.m)) flag(std::string(check.name) + " is not symmetric");
    }

    if (min_eigenvalue(spec.V) < kEigTol) flag("V must be positive definite");
    if (min_eigenvalue(spec.Quu) < kEigTol) flag("Quu must be positive definite");
    if (min_eigenvalue(spec.W) < -kEigTol) flag("W must be positive semidefinite");
    if (min_eigenvalue(spec.P0) < -kEigTol) flag("P0 must be positive semidefinite");
    if (min_eigenvalue(spec.Q0) < -kEigTol) flag("Q0 must be positive semidefinite");

    Eigen::MatrixXd stacked(n + q, n + q);
    stacked << spec.Qxx, spec.Qxu, spec.Qxu.transpose(), spec.Quu;
    if (min_eigenvalue(stacked) < -kEigTol)
        flag("stacked cost weight [[Qxx,Qxu],[Qxu',Quu]] must be positive semidefinite");

    return report;
}

ProblemSpec canonical_example() {
    ProblemSpec spec;
    spec.partition.n = {1, 1, 1};
    spec.partition.q = {1, 1, 1};
    spec.partition.p = {1, 1, 1};
    spec.N = 1000;

    spec.A.resize(3, 3);
    spec.A << 2, 0, 1,
              1, 2, 0,
              0, 1, 2;
    spec.B = Eigen::MatrixXd::Identity(3, 3);
    spec.C = Eigen::MatrixXd::Identity(3, 3);
    spec.W = Eigen::MatrixXd::Identity(3, 3);
    spec.V = Eigen::MatrixXd::Identity(3, 3);
    spec.P0 = Eigen::MatrixXd::Identity(3, 3);

    spec.Qxx.resize(3, 3);
    spec.Qxx << 3, 1, 1,
                1, 3, 1,
                1, 1, 3;
    spec.Qxu.resize(3, 3);
    spec.Qxu << 1, 0, -1,
                -1, 1, 0,
                0, -1, 1;
    spec.Quu = 2.0 * Eigen::MatrixXd::Identity(3, 3);
    spec.Q0 = spec.Qxx;
    return spec;
}

ProblemSpec load_problem(const std::string& json_text) {
    const jsonio::json root = jsonio::parse(json_text);
    jsonio::require_keys(root,
                         {"partition", "A", "B", "C", "W", "V", "P0", "N", "Qxx", "Qxu", "Quu",
                          "Q0"},
                         "problem");

    ProblemSpec spec;
    const jsonio::json& partition = jsonio::get_field(root, "partition", "problem");
    jsonio::require_keys(partition, {"n", "q", "p"}, "problem.partition");
    spec.partition.n = jsonio::get_int3(partition, "n", "problem.partition");
    spec.partition.q = jsonio::get_int3(partition, "q", "problem.partition");
    spec.partition.p = jsonio::get_int3(partition, "p", "problem.partition");
    for (int i = 0; i < 3; ++i) {
        if (spec.partition.n[i] < 1 || spec.partition.q[i] < 1 || spec.partition.p[i] < 1)
            throw std::invalid_argument("problem.partition: sizes must be positive");
    }

    const int n = spec.n();
    const int q = spec.q();
    const int p = spec.p();
    spec.A = jsonio::get_matrix(root, "A", n, n, "problem");
    spec.B = jsonio::get_matrix(root, "B", n, q, "problem");
    spec.C = jsonio::get_matrix(root, "C", p, n, "problem");
    spec.W = jsonio::get_matrix(root, "W", n, n, "problem");
    spec.V = jsonio::get_matrix(root, "V", p, p, "problem");
    spec.P0 = jsonio::get_matrix(root, "P0", n, n, "problem");
    spec.N = jsonio::get_int(root, "N", "problem");
    spec.Qxx = jsonio::get_matrix(root, "Qxx", n, n, "problem");
    spec.Qxu = jsonio::get_matrix(root, "Qxu", n, q, "problem");
    spec.Quu = jsonio::get_matrix(root, "Quu", q, q, "problem");
    spec.Q0 = jsonio::get_matrix(root, "Q0", n, n, "problem");
    return spec;
}

ProblemSpec load_problem_file(const std::string& path) {
    return load_problem(jsonio::slurp(path));
}

std::string problem_to_json(const ProblemSpec& spec) {
    using jsonio::matrix_to_json;
    using jsonio::vector_to_json;
    std::string out = "{\n";
    out += "  \"partition\": {\"n\": " + vector_to_json(spec.partition.n_sizes()) +
           ", \"q\": " + vector_to_json(spec.partition.q_sizes()) +
           ", \"p\": " + vector_to_json(spec.partition.p_sizes()) + "},\n";
    out += "  \"A\": " + matrix_to_json(spec.A) + ",\n";
    out += "  \"B\": " + matrix_to_json(spec.B) + ",\n";
    out += "  \"C\": " + matrix_to_json(spec.C) + ",\n";
    out += "  \"W\": " + matrix_to_json(spec.W) + ",\n";
    out += "  \"V\": " + matrix_to_json(spec.V) + ",\n";
    out += "  \"P0\": " + matrix_to_json(spec.P0) + ",\n";
    out += "  \"N\": " + std::to_string(spec.N) + ",\n";
    out += "  \"Qxx\": " + matrix_to_json(spec.Qxx) + ",\n";
    out += "  \"Qxu\": " + matrix_to_json(spec.Qxu) + ",\n";
    out += "  \"Quu\": " + matrix_to_json(spec.Quu) + ",\n";
    out += "  \"Q0\": " + matrix_to_json(spec.Q0) + "\n";
    out += "}\n";
    return out;
}

}  // namespace dlqg::model
