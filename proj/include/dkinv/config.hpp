#pragma once

#include "dkinv/dkernel.hpp"
#include "dkinv/linalg.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dkinv {

/// Malformed or inconsistent problem description; the message names the
/// offending line where it can be located.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Problem description read from JSON. Complex numbers are [re, im] pairs,
/// matrices are arrays of rows.
struct ProblemConfig {
    int p = 0;
    int n = 0;
    std::vector<double> d;
    double l = 1.0;
    ComplexMatrix theta1;
    ComplexMatrix theta2;
    ComplexMatrix beta;
    std::string route = "auto";  // gamma recovery route: auto | kernel | closed_form
    /// permutation[m] is the input index of sorted component m.
    std::vector<int> permutation;
    std::vector<std::string> warnings;

    [[nodiscard]] Realization realization() const {
        return Realization(theta1, theta2, beta, DiagonalStructure(d), l);
    }
};

namespace detail {

inline int line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

inline int line_of_key(const std::string& text, const std::string& key) {
    const auto pos = text.find("\"" + key + "\"");
    return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

inline ConfigError keyed_error(const std::string& text, const std::string& key, const std::string& msg) {
    const int line = line_of_key(text, key);
    std::ostringstream os;
    if (line > 0)
        os << "line " << line << ": ";
    os << "'" << key << "': " << msg;
    return ConfigError(os.str());
}

inline cplx parse_complex(const nlohmann::json& v) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw std::invalid_argument("complex entries must be [re, im] pairs");
    return {v[0].get<double>(), v[1].get<double>()};
}

inline ComplexMatrix parse_matrix(const nlohmann::json& v, int rows, int cols) {
    if (!v.is_array() || static_cast<int>(v.size()) != rows)
        throw std::invalid_argument("expected " + std::to_string(rows) + " rows");
    ComplexMatrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const auto& row = v[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw std::invalid_argument("row " + std::to_string(r) + " must have " + std::to_string(cols) + " entries");
        for (int c = 0; c < cols; ++c) m(r, c) = parse_complex(row[static_cast<std::size_t>(c)]);
    }
    return m;
}

inline nlohmann::json matrix_json(const ComplexMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(row);
    }
    return rows;
}

}  // namespace detail

inline ProblemConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("line " + std::to_string(detail::line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0)) +
                          ": malformed JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("line 1: top level must be a JSON object");

    ProblemConfig cfg;
    auto require = [&](const char* key) -> const nlohmann::json& {
        if (!j.contains(key)) throw detail::keyed_error(text, key, "missing required field");
        return j.at(key);
    };
    auto get_count = [&](const char* key) {
        const auto& v = require(key);
        if (!v.is_number_integer() || v.get<long>() <= 0)
            throw detail::keyed_error(text, key, "must be a positive integer");
        return v.get<int>();
    };
    cfg.p = get_count("p");
    cfg.n = get_count("n");

    const auto& dj = require("d");
    if (!dj.is_array() || static_cast<int>(dj.size()) != cfg.p)
        throw detail::keyed_error(text, "d", "must be an array of p numbers");
    for (const auto& v : dj) {
        if (!v.is_number() || !(v.get<double>() > 0.0))
            throw detail::keyed_error(text, "d", "entries must be positive numbers");
        cfg.d.push_back(v.get<double>());
    }
    const auto& lj = require("l");
    if (!lj.is_number() || !(lj.get<double>() > 0.0)) throw detail::keyed_error(text, "l", "must be a positive number");
    cfg.l = lj.get<double>();

    auto matrix = [&](const char* key, int rows, int cols) {
        try {
            return detail::parse_matrix(require(key), rows, cols);
        } catch (const std::invalid_argument& e) {
            throw detail::keyed_error(text, key, e.what());
        }
    };
    cfg.theta1 = matrix("theta1", cfg.n, cfg.p);
    cfg.theta2 = matrix("theta2", cfg.n, cfg.p);
    cfg.beta = matrix("beta", cfg.n, cfg.n);

    if (j.contains("route")) {
        const auto& rj = j.at("route");
        if (!rj.is_string()) throw detail::keyed_error(text, "route", "must be a string");
        cfg.route = rj.get<std::string>();
        if (cfg.route != "auto" && cfg.route != "kernel" && cfg.route != "closed_form")
            throw detail::keyed_error(text, "route", "must be one of auto, kernel, closed_form");
    }

    std::vector<int> prior(static_cast<std::size_t>(cfg.p));
    std::iota(prior.begin(), prior.end(), 0);
    if (j.contains("permutation")) {
        const auto& pj = j.at("permutation");
        std::vector<int> seen(static_cast<std::size_t>(cfg.p), 0);
        if (!pj.is_array() || static_cast<int>(pj.size()) != cfg.p)
            throw detail::keyed_error(text, "permutation", "must list p component indices");
        for (std::size_t m = 0; m < pj.size(); ++m) {
            if (!pj[m].is_number_integer()) throw detail::keyed_error(text, "permutation", "entries must be integers");
            const int v = pj[m].get<int>();
            if (v < 0 || v >= cfg.p || seen[static_cast<std::size_t>(v)]++)
                throw detail::keyed_error(text, "permutation", "not a permutation of 0..p-1");
            prior[m] = v;
        }
    }

    // components are processed with d non-increasing
    std::vector<int> order(static_cast<std::size_t>(cfg.p));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return cfg.d[static_cast<std::size_t>(a)] > cfg.d[static_cast<std::size_t>(b)];
    });
    const bool sorted = std::is_sorted(order.begin(), order.end());
    if (!sorted) {
        cfg.warnings.push_back("d is not non-increasing; components were re-sorted");
        std::vector<double> d2;
        ComplexMatrix t1(cfg.n, cfg.p), t2(cfg.n, cfg.p);
        for (int m = 0; m < cfg.p; ++m) {
            const int src = order[static_cast<std::size_t>(m)];
            d2.push_back(cfg.d[static_cast<std::size_t>(src)]);
            t1.col(m) = cfg.theta1.col(src);
            t2.col(m) = cfg.theta2.col(src);
        }
        cfg.d = std::move(d2);
        cfg.theta1 = std::move(t1);
        cfg.theta2 = std::move(t2);
    }
    cfg.permutation.resize(static_cast<std::size_t>(cfg.p));
    for (int m = 0; m < cfg.p; ++m)
        cfg.permutation[static_cast<std::size_t>(m)] = prior[static_cast<std::size_t>(order[static_cast<std::size_t>(m)])];

    try {
        (void)cfg.realization();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("line 1: inconsistent problem: ") + e.what());
    }
    return cfg;
}

inline ProblemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

inline nlohmann::json config_json(const ProblemConfig& cfg) {
    nlohmann::json j;
    j["p"] = cfg.p;
    j["n"] = cfg.n;
    j["d"] = cfg.d;
    j["l"] = cfg.l;
    j["theta1"] = detail::matrix_json(cfg.theta1);
    j["theta2"] = detail::matrix_json(cfg.theta2);
    j["beta"] = detail::matrix_json(cfg.beta);
    j["route"] = cfg.route;
    j["permutation"] = cfg.permutation;
    return j;
}

/// Pretty JSON with one matrix row per line.
inline std::string serialize_config(const ProblemConfig& cfg) {
    const nlohmann::json j = config_json(cfg);
    const char* order[] = {"p", "n", "d", "l", "theta1", "theta2", "beta", "route", "permutation"};
    std::string out = "{\n";
    bool first = true;
    for (const char* key : order) {
        if (!first) out += ",\n";
        first = false;
        out += "  \"" + std::string(key) + "\": ";
        const auto& v = j.at(key);
        if (v.is_array() && !v.empty() && v[0].is_array()) {
            out += "[\n";
            for (std::size_t r = 0; r < v.size(); ++r)
                out += "    " + v[r].dump() + (r + 1 < v.size() ? ",\n" : "\n");
            out += "  ]";
        } else {
            out += v.dump();
        }
    }
    return out + "\n}\n";
}

inline ProblemConfig config_from_realization(const Realization& r) {
    ProblemConfig cfg;
    cfg.p = r.p();
    cfg.n = r.n();
    cfg.d = r.D.values();
    cfg.l = r.l;
    cfg.theta1 = r.theta1;
    cfg.theta2 = r.theta2;
    cfg.beta = r.beta;
    cfg.permutation.resize(static_cast<std::size_t>(cfg.p));
    std::iota(cfg.permutation.begin(), cfg.permutation.end(), 0);
    return cfg;
}

}  // namespace dkinv
