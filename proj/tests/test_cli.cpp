#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

// End-to-end tests of the command-line binary: every case spawns the real
// executable (path injected as DLQG_CLI_PATH at configure time), captures its
// streams and exit code, and inspects the artifacts it writes.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dlqg/jsonio.hpp"
#include "dlqg/model.hpp"
#include "dlqg/synthesis.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
namespace jsonio = dlqg::jsonio;
namespace model = dlqg::model;

namespace {

const fs::path& scratch() {
    static const fs::path dir = [] {
        unsetenv("THREADS");  // children inherit the environment
        fs::path d = fs::temp_directory_path() / "dlqg_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string read_file(const fs::path& path) {
    std::ifstream file(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return buffer.str();
}

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path out_file = scratch() / ("stdout_" + std::to_string(counter) + ".txt");
    const fs::path err_file = scratch() / ("stderr_" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string command = std::string(DLQG_CLI_PATH) + " " + args + " > \"" +
                                out_file.string() + "\" 2> \"" + err_file.string() + "\"";
    const int status = std::system(command.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = read_file(out_file);
    result.err = read_file(err_file);
    return result;
}

fs::path write_text(const std::string& name, const std::string& content) {
    const fs::path path = scratch() / name;
    std::ofstream file(path, std::ios::binary);
    file << content;
    return path;
}

// Small canonical instance; horizons stay tiny to keep the suite quick.
fs::path canonical_problem(const std::string& name, int horizon) {
    model::ProblemSpec spec = model::canonical_example();
    spec.N = horizon;
    return write_text(name, model::problem_to_json(spec));
}

void check_error_json(const RunResult& result, const std::string& kind) {
    CAPTURE(result.err);
    const jsonio::json doc = jsonio::parse(result.err);
    CHECK(doc.at("kind").get<std::string>() == kind);
    CHECK(!doc.at("message").get<std::string>().empty());
}

}  // namespace

TEST_CASE("synth writes a deterministic schedule with the contracted shapes") {
    const fs::path problem = canonical_problem("problem12.json", 12);
    const fs::path out_dir = scratch() / "synth_out";

    const RunResult first =
        run_cli("synth --problem " + problem.string() + " --out " + out_dir.string());
    CAPTURE(first.err);
    REQUIRE(first.exit_code == 0);

    const std::string gains_text = read_file(out_dir / "gains.json");
    const jsonio::json gains = jsonio::parse(gains_text);
    CHECK(gains.at("N").get<int>() == 12);
    CHECK(gains.at("F").size() == 12);
    CHECK(gains.at("F1").size() == 11);
    CHECK(gains.at("G").size() == 11);
    CHECK(gains.at("L").size() == 12);
    CHECK(gains.at("K").size() == 12);
    CHECK(gains.at("K1").size() == 12);
    CHECK(dlqg::synthesis::load_control_law(gains_text).N == 12);  // library re-loads the file

    const jsonio::json summary = jsonio::parse(first.out);
    CHECK(summary.at("command").get<std::string>() == "synth");
    CHECK(summary.at("pattern").get<std::string>() == "three-player");
    CHECK(summary.at("N").get<int>() == 12);
    const double jw = summary.at("Jw").get<double>();
    const double jtilde = summary.at("Jtilde").get<double>();
    const double expected = summary.at("expected_cost").get<double>();
    CHECK(jw > 0.0);
    CHECK(jtilde > 0.0);
    CHECK(std::abs(expected - (jw + jtilde)) <= 1e-9 * expected);

    const RunResult second =
        run_cli("synth --problem " + problem.string() + " --out " + out_dir.string());
    REQUIRE(second.exit_code == 0);
    CHECK(second.out == first.out);
    CHECK(read_file(out_dir / "gains.json") == gains_text);
}

TEST_CASE("synth handles every pattern token") {
    const fs::path problem = canonical_problem("problem8.json", 8);
    for (const std::string token : {"three-player", "central-0", "central-2", "one-step"}) {
        const fs::path out_dir = scratch() / ("synth_" + token);
        const RunResult result = run_cli("synth --problem " + problem.string() + " --pattern " +
                                         token + " --out " + out_dir.string());
        CAPTURE(token);
        CAPTURE(result.err);
        CHECK(result.exit_code == 0);
        CHECK(fs::exists(out_dir / "gains.json"));
    }
}

TEST_CASE("input problems exit with code 2 and machine-readable errors") {
    const fs::path problem = canonical_problem("problem6.json", 6);

    SUBCASE("malformed problem JSON") {
        const fs::path bad = write_text("broken.json", "{ this is not json");
        const RunResult result =
            run_cli("synth --problem " + bad.string() + " --out " + (scratch() / "x1").string());
        CHECK(result.exit_code == 2);
        check_error_json(result, "input");
    }
    SUBCASE("missing problem file") {
        const RunResult result = run_cli("synth --problem " + (scratch() / "absent.json").string() +
                                         " --out " + (scratch() / "x2").string());
        CHECK(result.exit_code == 2);
        check_error_json(result, "input");
    }
    SUBCASE("unknown pattern name") {
        const RunResult result = run_cli("synth --problem " + problem.string() +
                                         " --pattern five-player --out " + (scratch() / "x3").string());
        CHECK(result.exit_code == 2);
        check_error_json(result, "input");
    }
    SUBCASE("unknown flag") {
        const RunResult result = run_cli("synth --problem " + problem.string() + " --bogus 1");
        CHECK(result.exit_code == 2);
        check_error_json(result, "input");
    }
    SUBCASE("missing subcommand") {
        const RunResult result = run_cli("");
        CHECK(result.exit_code == 2);
        check_error_json(result, "input");
    }
    SUBCASE("compare with zero runs") {
        const RunResult result = run_cli("compare --problem " + problem.string() +
                                         " --runs 0 --out " + (scratch() / "x4").string());
        CHECK(result.exit_code == 2);
        check_error_json(result, "input");
    }
}

TEST_CASE("compare writes a reproducible report pair") {
    const fs::path problem = canonical_problem("problem10.json", 10);
    const fs::path out_dir = scratch() / "compare_out";
    const std::string args = "compare --problem " + problem.string() +
                             " --runs 6 --seed 3 --out " + out_dir.string();

    const RunResult first = run_cli(args);
    CAPTURE(first.err);
    REQUIRE(first.exit_code == 0);

    const std::string csv = read_file(out_dir / "report.csv");
    const std::string json_text = read_file(out_dir / "report.json");
    CHECK(first.out == json_text);  // stdout mirrors the JSON artifact

    std::istringstream lines(csv);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "pattern,analytic,mc_mean,mc_stderr,runs");
    int data_rows = 0;
    while (std::getline(lines, line)) ++data_rows;
    CHECK(data_rows == 4);

    const jsonio::json report = jsonio::parse(json_text);
    CHECK(report.at("N").get<int>() == 10);
    REQUIRE(report.at("rows").size() == 4);
    CHECK(report.at("rows").at(0).at("pattern").get<std::string>() == "three-player");
    CHECK(report.at("rows").at(1).at("pattern").get<std::string>() == "one-step");
    CHECK(report.at("rows").at(2).at("pattern").get<std::string>() == "central-0");
    CHECK(report.at("rows").at(3).at("pattern").get<std::string>() == "central-2");
    for (const auto& row : report.at("rows")) {
        CHECK(row.at("runs").get<int>() == 6);
        CHECK(row.contains("mc_stderr"));
        CHECK(row.at("analytic").get<double>() > 0.0);
        CHECK(row.at("analytic_per_step").get<double>() ==
              row.at("analytic").get<double>() / 10.0);
    }
    REQUIRE(report.at("ratios").size() == 6);
    CHECK(report.at("ratios").at(0).at("label").get<std::string>() == "three-player / one-step");
    CHECK(report.at("ratios").at(0).at("value").get<double>() > 1.0);

    const RunResult second = run_cli(args);
    REQUIRE(second.exit_code == 0);
    CHECK(second.out == first.out);
    CHECK(read_file(out_dir / "report.csv") == csv);
    CHECK(read_file(out_dir / "report.json") == json_text);

    SUBCASE("a single run still reports the dispersion column") {
        const RunResult single = run_cli("compare --problem " + problem.string() +
                                         " --runs 1 --seed 3 --out " + (scratch() / "c1").string());
        REQUIRE(single.exit_code == 0);
        const jsonio::json doc = jsonio::parse(single.out);
        for (const auto& row : doc.at("rows")) {
            CHECK(row.contains("mc_stderr"));
            CHECK(row.at("runs").get<int>() == 1);
        }
    }
}

TEST_CASE("simulate replays a saved schedule deterministically") {
    const fs::path problem = canonical_problem("problem9.json", 9);
    const fs::path synth_dir = scratch() / "sim_gains";
    REQUIRE(run_cli("synth --problem " + problem.string() + " --out " + synth_dir.string())
                .exit_code == 0);
    const fs::path gains = synth_dir / "gains.json";

    const fs::path out_dir = scratch() / "sim_out";
    const std::string args = "simulate --problem " + problem.string() + " --gains " +
                             gains.string() + " --seed 9 --out " + out_dir.string();
    const RunResult first = run_cli(args);
    CAPTURE(first.err);
    REQUIRE(first.exit_code == 0);

    const std::string csv = read_file(out_dir / "trajectory.csv");
    const jsonio::json summary = jsonio::parse(first.out);
    const double cost = summary.at("cost").get<double>();
    CHECK(cost > 0.0);

    // The stage-cost column of the artifact reassembles the printed cost.
    std::istringstream lines(csv);
    std::string line;
    REQUIRE(std::getline(lines, line));  // header
    double recomputed = 0.0;
    while (std::getline(lines, line)) {
        const size_t last_comma = line.find_last_of(',');
        REQUIRE(last_comma != std::string::npos);
        recomputed += std::stod(line.substr(last_comma + 1));
    }
    CHECK(std::abs(recomputed - cost) <= 1e-9 * (1.0 + cost));

    const RunResult second = run_cli(args);
    REQUIRE(second.exit_code == 0);
    CHECK(second.out == first.out);
    CHECK(read_file(out_dir / "trajectory.csv") == csv);

    SUBCASE("a zero-noise problem yields the all-zero trajectory") {
        model::ProblemSpec quiet = model::canonical_example();
        quiet.N = 9;
        quiet.W.setZero();
        quiet.V.setZero();
        quiet.P0.setZero();
        const fs::path quiet_path = write_text("quiet9.json", model::problem_to_json(quiet));
        const RunResult rest = run_cli("simulate --problem " + quiet_path.string() + " --gains " +
                                       gains.string() + " --seed 4 --out " +
                                       (scratch() / "sim_quiet").string());
        CAPTURE(rest.err);
        REQUIRE(rest.exit_code == 0);
        CHECK(jsonio::parse(rest.out).at("cost").get<double>() == 0.0);

        std::istringstream quiet_lines(read_file(scratch() / "sim_quiet" / "trajectory.csv"));
        std::string quiet_line;
        REQUIRE(std::getline(quiet_lines, quiet_line));  // header
        while (std::getline(quiet_lines, quiet_line)) {
            std::istringstream fields(quiet_line);
            std::string field;
            std::getline(fields, field, ',');  // the step index may be nonzero
            while (std::getline(fields, field, ',')) CHECK(std::stod(field) == 0.0);
        }
    }

    SUBCASE("a horizon mismatch between gains and problem exits with code 2") {
        const fs::path longer = canonical_problem("problem13.json", 13);
        const RunResult result = run_cli("simulate --problem " + longer.string() + " --gains " +
                                         gains.string() + " --seed 1 --out " +
                                         (scratch() / "sim_bad1").string());
        CHECK(result.exit_code == 2);
        check_error_json(result, "input");
    }

    SUBCASE("a block-dimension mismatch exits with code 2") {
        const fs::path mixed =
            write_text("mixed9.json", model::problem_to_json(test_support::mixed_instance(9)));
        const RunResult result = run_cli("simulate --problem " + mixed.string() + " --gains " +
                                         gains.string() + " --seed 1 --out " +
                                         (scratch() / "sim_bad2").string());
        CHECK(result.exit_code == 2);
        check_error_json(result, "input");
    }
}
