#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

// Shared JSON plumbing: strict extraction helpers on top of nlohmann::json
// for input, and a fixed-format emitter for output.  All numeric output goes
// through format_double (17 significant digits, round-trip exact) so that
// repeated runs produce byte-identical artifacts.

namespace dlqg::jsonio {

using json = nlohmann::json;

// Parse text; rethrows nlohmann parse errors as std::invalid_argument.
json parse(const std::string& text);

// Read a whole file; throws std::invalid_argument if unreadable.
std::string slurp(const std::string& path);

// Object access that rejects unknown keys: `allowed` must list every key the
// caller will consume.  Throws std::invalid_argument naming the stray key.
void require_keys(const json& object, const std::vector<std::string>& allowed,
                  const std::string& where);

// Typed getters; throw std::invalid_argument with the field name on
// missing/mistyped fields.
const json& get_field(const json& object, const std::string& key, const std::string& where);
int get_int(const json& object, const std::string& key, const std::string& where);

// Row-major nested array -> matrix with exact expected shape.
Eigen::MatrixXd get_matrix(const json& object, const std::string& key, int rows, int cols,
                           const std::string& where);

// Row-major nested array -> matrix, shape inferred from the document (at
// least one row; ragged or non-numeric input rejected).
Eigen::MatrixXd matrix_from_json(const json& value, const std::string& label);

// Length-3 integer array (player partition entry).
std::array<int, 3> get_int3(const json& object, const std::string& key, const std::string& where);

// Shortest-width decimal with up to 17 significant digits; parses back to
// exactly the same double.
std::string format_double(double value);

// Row-major nested-array literal using format_double.
std::string matrix_to_json(const Eigen::MatrixXd& m);
std::string vector_to_json(const std::vector<int>& v);

}  // namespace dlqg::jsonio
