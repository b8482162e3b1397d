#include <dlqg/jsonio.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dlqg::jsonio {

json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("JSON parse error: ") + e.what());
    }
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void require_keys(const json& object, const std::vector<std::string>& allowed,
                  const std::string& where) {
    if (!object.is_object()) throw std::invalid_argument(where + ": expected a JSON object");
    for (const auto& item : object.items()) {
        bool known = false;
        for (const auto& key : allowed) known = known || key == item.key();
        if (!known) throw std::invalid_argument(where + ": unknown field \"" + item.key() + "\"");
    }
}

const json& get_field(const json& object, const std::string& key, const std::string& where) {
    if (!object.is_object() || !object.contains(key))
        throw std::invalid_argument(where + ": missing field \"" + key + "\"");
    return object.at(key);
}

int get_int(const json& object, const std::string& key, const std::string& where) {
    const json& field = get_field(object, key, where);
    if (!field.is_number_integer())
        throw std::invalid_argument(where + ": field \"" + key + "\" must be an integer");
    return field.get<int>();
}

Eigen::MatrixXd get_matrix(const json& object, const std::string& key, int rows, int cols,
                           const std::string& where) {
    const json& field = get_field(object, key, where);
    const std::string label = where + ": field \"" + key + "\"";
    if (!field.is_array() || static_cast<int>(field.size()) != rows)
        throw std::invalid_argument(label + " must be an array of " + std::to_string(rows) +
                                    " rows");
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const json& row = field.at(i);
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw std::invalid_argument(label + " row " + std::to_string(i) + " must have " +
                                        std::to_string(cols) + " entries");
        for (int j = 0; j < cols; ++j) {
            const json& entry = row.at(j);
            if (!entry.is_number())
                throw std::invalid_argument(label + " entry (" + std::to_string(i) + "," +
                                            std::to_string(j) + ") must be a number");
            m(i, j) = entry.get<double>();
        }
    }
    return m;
}

Eigen::MatrixXd matrix_from_json(const json& value, const std::string& label) {
    if (!value.is_array() || value.empty())
        throw std::invalid_argument(label + " must be a non-empty array of rows");
    const auto rows = static_cast<int>(value.size());
    const json& first = value.at(0);
    if (!first.is_array() || first.empty())
        throw std::invalid_argument(label + " row 0 must be a non-empty array");
    const auto cols = static_cast<int>(first.size());
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const json& row = value.at(i);
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw std::invalid_argument(label + " row " + std::to_string(i) + " must have " +
                                        std::to_string(cols) + " entries");
        for (int j = 0; j < cols; ++j) {
            const json& entry = row.at(j);
            if (!entry.is_number())
                throw std::invalid_argument(label + " entry (" + std::to_string(i) + "," +
                                            std::to_string(j) + ") must be a number");
            m(i, j) = entry.get<double>();
        }
    }
    return m;
}

std::array<int, 3> get_int3(const json& object, const std::string& key, const std::string& where) {
    const json& field = get_field(object, key, where);
    if (!field.is_array() || field.size() != 3)
        throw std::invalid_argument(where + ": field \"" + key + "\" must have 3 entries");
    std::array<int, 3> out{};
    for (int i = 0; i < 3; ++i) {
        if (!field.at(i).is_number_integer())
            throw std::invalid_argument(where + ": field \"" + key + "\" must hold integers");
        out[i] = field.at(i).get<int>();
    }
    return out;
}

std::string format_double(double value) {
    if (!std::isfinite(value)) throw std::runtime_error("cannot serialize non-finite value");
    char buffer[64];
    auto result = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                std::chars_format::general, 17);
    return std::string(buffer, result.ptr);
}

std::string matrix_to_json(const Eigen::MatrixXd& m) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out += i == 0 ? "[" : ",[";
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out += ",";
            out += format_double(m(i, j));
        }
        out += "]";
    }
    out += "]";
    return out;
}

std::string vector_to_json(const std::vector<int>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ",";
        out += std::to_string(v[i]);
    }
    out += "]";
    return out;
}

}  // namespace dlqg::jsonio
