#pragma once

// JSON documents for adapted expansions and run manifests, and the
// key=value override format for solver settings.

#include <cstdint>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "adaptpc/adaptation.hpp"
#include "adaptpc/csv.hpp"
#include "adaptpc/error.hpp"

namespace adaptpc {

inline constexpr const char* expansion_format = "adaptpc-expansion/1";
inline constexpr const char* manifest_format = "adaptpc-manifest/1";
inline constexpr const char* tool_version = "0.1.0";

inline nlohmann::json to_json(const AdaptedExpansion& a) {
    nlohmann::json j;
    j["format"] = expansion_format;
    j["order"] = a.order;
    j["input_dimension"] = a.input_dimension();
    j["reduced_dimension"] = a.reduced_dimension();
    j["fixed_rows"] = a.projection.fixed_rows;
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < a.projection.w.rows(); ++r) {
        std::vector<double> row(a.projection.w.cols());
        for (Eigen::Index k = 0; k < a.projection.w.cols(); ++k) row[static_cast<std::size_t>(k)] = a.projection.w(r, k);
        rows.push_back(row);
    }
    j["projection"] = rows;
    auto indices = nlohmann::json::array();
    for (const auto& alpha : a.expansion.index_set) indices.push_back(alpha.entries);
    j["multi_indices"] = indices;
    j["coefficients"] = std::vector<double>(a.expansion.coefficients.data(), a.expansion.coefficients.data() + a.expansion.coefficients.size());
    j["fit_epsilon"] = a.fit_epsilon;
    j["used_ols"] = a.used_ols;
    j["l2_residual"] = a.l2_residual;
    j["outer_iterations"] = a.outer_iterations;
    j["converged"] = a.converged;
    j["restart"] = a.restart;
    j["objective_trace"] = a.objective_trace;
    return j;
}

inline AdaptedExpansion adapted_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != expansion_format)
            throw ArgumentError("unsupported expansion format '" + j.at("format").get<std::string>() + "'");
        AdaptedExpansion a;
        a.order = j.at("order").get<int>();
        const int d = j.at("input_dimension").get<int>();
        const int d0 = j.at("reduced_dimension").get<int>();
        Eigen::MatrixXd w(d0, d);
        const auto& rows = j.at("projection");
        if (static_cast<int>(rows.size()) != d0) throw ArgumentError("projection has wrong row count");
        for (int r = 0; r < d0; ++r) {
            const auto row = rows.at(static_cast<std::size_t>(r)).get<std::vector<double>>();
            if (static_cast<int>(row.size()) != d) throw ArgumentError("projection row has wrong length");
            for (int k = 0; k < d; ++k) w(r, k) = row[static_cast<std::size_t>(k)];
        }
        a.projection = ProjectionMatrix(std::move(w), j.value("fixed_rows", 0));
        MultiIndexSet set(d0, a.order);
        const auto indices = j.at("multi_indices").get<std::vector<std::vector<int>>>();
        const auto coeffs = j.at("coefficients").get<std::vector<double>>();
        if (indices.size() != coeffs.size()) throw ArgumentError("multi-index and coefficient counts differ");
        Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(set.size()));
        for (std::size_t k = 0; k < indices.size(); ++k) {
            const int pos = set.find(indices[k]);
            if (pos < 0) throw ArgumentError("multi-index outside the order-" + std::to_string(a.order) + " set");
            c(pos) = coeffs[k];
        }
        a.expansion = ChaosExpansion(std::move(set), std::move(c));
        a.fit_epsilon = j.value("fit_epsilon", 0.0);
        a.used_ols = j.value("used_ols", false);
        a.l2_residual = j.value("l2_residual", 0.0);
        a.outer_iterations = j.value("outer_iterations", 0);
        a.converged = j.value("converged", false);
        a.restart = j.value("restart", 0);
        a.objective_trace = j.value("objective_trace", std::vector<double>{});
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("malformed expansion document: ") + e.what());
    }
}

inline void write_expansion(const AdaptedExpansion& a, const std::filesystem::path& path) {
    write_file_atomic(path, to_json(a).dump(2) + "\n");
}

inline AdaptedExpansion read_expansion(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(path.string() + ": " + e.what());
    }
    return adapted_from_json(j);
}

// ---- solver settings as key=value ------------------------------------------

/// Every tunable setting of a run, as text; values print with 17 digits so a
/// snapshot replays bit for bit.
inline std::map<std::string, std::string> config_snapshot(const AdaptConfig& c) {
    std::map<std::string, std::string> m;
    m["epsilon"] = c.epsilon ? format_real(*c.epsilon) : "auto";
    m["max_outer_iterations"] = std::to_string(c.max_outer_iterations);
    m["tolerance_l1"] = format_real(c.tolerance_l1);
    m["tolerance_l2"] = format_real(c.tolerance_l2);
    m["restarts"] = std::to_string(c.restarts);
    m["seed"] = std::to_string(c.seed);
    m["ols_factor"] = format_real(c.ols_factor);
    m["rotate"] = c.rotate ? "true" : "false";
    m["dr.gamma"] = format_real(c.dr.gamma);
    m["dr.lambda"] = format_real(c.dr.lambda);
    m["dr.max_iterations"] = std::to_string(c.dr.max_iterations);
    m["dr.stop_tolerance"] = format_real(c.dr.stop_tolerance);
    m["rotation.max_iterations"] = std::to_string(c.rotation.max_iterations);
    m["rotation.gradient_tolerance"] = format_real(c.rotation.gradient_tolerance);
    m["rotation.objective_tolerance"] = format_real(c.rotation.objective_tolerance);
    m["rotation.initial_step"] = format_real(c.rotation.initial_step);
    m["rotation.max_step"] = format_real(c.rotation.max_step);
    m["rotation.shrink"] = format_real(c.rotation.shrink);
    m["rotation.sufficient_decrease"] = format_real(c.rotation.sufficient_decrease);
    m["rotation.max_shrinks"] = std::to_string(c.rotation.max_shrinks);
    m["crossval.grid_size"] = std::to_string(c.crossval_grid_size);
    m["crossval.train_fraction"] = format_real(c.crossval_train_fraction);
    return m;
}

namespace detail {

inline double to_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ArgumentError("setting '" + key + "': '" + v + "' is not a number");
    }
}

inline long long to_integer(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ArgumentError("setting '" + key + "': '" + v + "' is not an integer");
    }
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ArgumentError("setting '" + key + "': '" + v + "' is not a boolean");
}

} // namespace detail

inline void apply_setting(AdaptConfig& c, const std::string& key, const std::string& value) {
    using namespace detail;
    if (key == "epsilon") {
        if (value == "auto") c.epsilon.reset();
        else c.epsilon = to_real(key, value);
    } else if (key == "max_outer_iterations") c.max_outer_iterations = static_cast<int>(to_integer(key, value));
    else if (key == "tolerance_l1") c.tolerance_l1 = to_real(key, value);
    else if (key == "tolerance_l2") c.tolerance_l2 = to_real(key, value);
    else if (key == "restarts") c.restarts = static_cast<int>(to_integer(key, value));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_integer(key, value));
    else if (key == "ols_factor") c.ols_factor = to_real(key, value);
    else if (key == "rotate") c.rotate = to_bool(key, value);
    else if (key == "dr.gamma") c.dr.gamma = to_real(key, value);
    else if (key == "dr.lambda") c.dr.lambda = to_real(key, value);
    else if (key == "dr.max_iterations") c.dr.max_iterations = static_cast<int>(to_integer(key, value));
    else if (key == "dr.stop_tolerance") c.dr.stop_tolerance = to_real(key, value);
    else if (key == "rotation.max_iterations") c.rotation.max_iterations = static_cast<int>(to_integer(key, value));
    else if (key == "rotation.gradient_tolerance") c.rotation.gradient_tolerance = to_real(key, value);
    else if (key == "rotation.objective_tolerance") c.rotation.objective_tolerance = to_real(key, value);
    else if (key == "rotation.initial_step") c.rotation.initial_step = to_real(key, value);
    else if (key == "rotation.max_step") c.rotation.max_step = to_real(key, value);
    else if (key == "rotation.shrink") c.rotation.shrink = to_real(key, value);
    else if (key == "rotation.sufficient_decrease") c.rotation.sufficient_decrease = to_real(key, value);
    else if (key == "rotation.max_shrinks") c.rotation.max_shrinks = static_cast<int>(to_integer(key, value));
    else if (key == "crossval.grid_size") c.crossval_grid_size = static_cast<int>(to_integer(key, value));
    else if (key == "crossval.train_fraction") c.crossval_train_fraction = to_real(key, value);
    else throw ArgumentError("unknown setting '" + key + "'");
}

/// Lines of key=value; blank lines and '#' comments are ignored.
inline void apply_settings_text(AdaptConfig& c, const std::string& text, const std::string& origin = "<settings>") {
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        auto line = std::string(detail::trim(raw));
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(origin, line_no, 0, "expected key=value");
        try {
            apply_setting(c, std::string(detail::trim(std::string_view(line).substr(0, eq))),
                          std::string(detail::trim(std::string_view(line).substr(eq + 1))));
        } catch (const ArgumentError& e) {
            throw ParseError(origin, line_no, 0, e.what());
        }
    }
}


// ---- run manifests ----------------------------------------------------------

struct ManifestEntry {
    std::string file;  // expansion document, relative to the manifest
    AdaptedExpansion result;
};

/// Everything needed to repeat an adapt run: the dataset identity, every
/// solver setting and the per-d' results to compare against.
struct RunManifest {
    std::string tool_version = adaptpc::tool_version;
    std::string data_path;
    std::string data_digest;
    Eigen::Index rows = 0;
    Eigen::Index columns = 0;
    std::string ranges_path;  // empty: germ-space data
    std::string ranges_digest;
    int order = 0;
    int max_dim = 0;
    std::map<std::string, std::string> settings;
    std::vector<ManifestEntry> results;
};

inline nlohmann::json to_json(const RunManifest& m) {
    nlohmann::json j;
    j["format"] = manifest_format;
    j["tool_version"] = m.tool_version;
    j["data"] = {{"path", m.data_path}, {"digest", m.data_digest}, {"rows", m.rows}, {"columns", m.columns}};
    j["ranges"] = m.ranges_path.empty() ? nlohmann::json(nullptr) : nlohmann::json{{"path", m.ranges_path}, {"digest", m.ranges_digest}};
    j["order"] = m.order;
    j["max_dim"] = m.max_dim;
    j["settings"] = m.settings;
    auto results = nlohmann::json::array();
    for (const auto& e : m.results) {
        auto r = to_json(e.result);
        r["file"] = e.file;
        results.push_back(std::move(r));
    }
    j["results"] = results;
    return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != manifest_format)
            throw ArgumentError("unsupported manifest format '" + j.at("format").get<std::string>() + "'");
        RunManifest m;
        m.tool_version = j.at("tool_version").get<std::string>();
        const auto& data = j.at("data");
        m.data_path = data.at("path").get<std::string>();
        m.data_digest = data.at("digest").get<std::string>();
        m.rows = data.at("rows").get<Eigen::Index>();
        m.columns = data.at("columns").get<Eigen::Index>();
        if (!j.at("ranges").is_null()) {
            m.ranges_path = j["ranges"].at("path").get<std::string>();
            m.ranges_digest = j["ranges"].at("digest").get<std::string>();
        }
        m.order = j.at("order").get<int>();
        m.max_dim = j.at("max_dim").get<int>();
        m.settings = j.at("settings").get<std::map<std::string, std::string>>();
        for (const auto& r : j.at("results")) {
            auto doc = r;
            doc["format"] = expansion_format;
            m.results.push_back({r.at("file").get<std::string>(), adapted_from_json(doc)});
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("malformed manifest: ") + e.what());
    }
}

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    write_file_atomic(path, to_json(m).dump(2) + "\n");
}

inline RunManifest read_manifest(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(path.string() + ": " + e.what());
    }
    return manifest_from_json(j);
}

inline AdaptConfig config_from_snapshot(const std::map<std::string, std::string>& settings) {
    AdaptConfig c;
    for (const auto& [k, v] : settings) apply_setting(c, k, v);
    return c;
}

/// Bitwise comparison of W, c and the residual; returns a description of the
/// first difference, empty when identical.
inline std::string compare_results(const AdaptedExpansion& a, const AdaptedExpansion& b) {
    if (a.projection.w.rows() != b.projection.w.rows() || a.projection.w.cols() != b.projection.w.cols()) return "projection shape";
    if (a.projection.w != b.projection.w) return "projection W";
    if (a.expansion.coefficients.size() != b.expansion.coefficients.size() || a.expansion.coefficients != b.expansion.coefficients)
        return "coefficients";
    if (a.l2_residual != b.l2_residual) return "l2_residual";
    if (a.fit_epsilon != b.fit_epsilon) return "fit_epsilon";
    if (a.outer_iterations != b.outer_iterations) return "outer_iterations";
    return {};
}

} // namespace adaptpc
