#pragma once

// Dataset and parameter-range CSV files.
//
// Dataset layout: one header row naming the d input columns followed by the
// output column, then one row per sample. Values are written with 17
// significant digits so that a write/read cycle is lossless.

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "adaptpc/dataset.hpp"
#include "adaptpc/error.hpp"
#include "adaptpc/transform.hpp"

namespace adaptpc {

/// Parse failures carry the 1-based line (and column when known).
class ParseError : public Error {
public:
    ParseError(const std::string& file, std::size_t line, std::size_t column, const std::string& what)
        : Error(file + ":" + std::to_string(line) + (column ? ":" + std::to_string(column) : std::string()) + ": " + what),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_, column_;
};

/// Write via a temporary sibling file and rename, so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out << contents;
        out.flush();
        if (!out) throw Error("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_real(std::string_view field, const std::string& file, std::size_t line, std::size_t column) {
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
        throw ParseError(file, line, column, "cannot parse '" + std::string(field) + "' as a real number");
    if (!std::isfinite(v)) throw ParseError(file, line, column, "non-finite value '" + std::string(field) + "'");
    return v;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline CsvTable parse_numeric_csv(const std::string& text, const std::string& file) {
    CsvTable table;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF && static_cast<unsigned char>(text[1]) == 0xBB &&
        static_cast<unsigned char>(text[2]) == 0xBF)
        in.seekg(3);
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty()) continue;
        const auto fields = split_commas(line);
        if (table.header.empty()) {
            for (auto f : fields) table.header.emplace_back(f);
            continue;
        }
        if (fields.size() != table.header.size())
            throw ParseError(file, line_no, 0,
                             "row has " + std::to_string(fields.size()) + " fields, header has " + std::to_string(table.header.size()));
        std::vector<double> row(fields.size());
        for (std::size_t k = 0; k < fields.size(); ++k) row[k] = parse_real(fields[k], file, line_no, k + 1);
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) throw ParseError(file, 1, 0, "missing header row");
    return table;
}

} // namespace detail

inline std::vector<ParameterRange> read_ranges_csv(const std::filesystem::path& path) {
    const std::string file = path.string();
    std::istringstream in(read_file(path));
    std::string raw;
    std::size_t line_no = 0;
    std::vector<ParameterRange> ranges;
    bool header = true;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = detail::trim(raw);
        if (line.empty()) continue;
        const auto f = detail::split_commas(line);
        if (f.size() != 3) throw ParseError(file, line_no, 0, "expected name,lower,upper");
        if (header) {
            header = false;
            if (f[0] == "name") continue;
        }
        try {
            ranges.emplace_back(std::string(f[0]), detail::parse_real(f[1], file, line_no, 2), detail::parse_real(f[2], file, line_no, 3));
        } catch (const ArgumentError& e) {
            throw ParseError(file, line_no, 0, e.what());
        }
    }
    if (ranges.empty()) throw ParseError(file, line_no, 0, "no parameter ranges");
    return ranges;
}

inline void write_ranges_csv(const std::vector<ParameterRange>& ranges, const std::filesystem::path& path) {
    std::string out = "name,lower,upper\n";
    for (const auto& r : ranges) out += r.name + "," + format_real(r.lower) + "," + format_real(r.upper) + "\n";
    write_file_atomic(path, out);
}

struct CsvSchema {
    // When set, input columns hold physical values named after these ranges
    // (any column order) and are mapped to standard Gaussian germs on read.
    std::optional<std::vector<ParameterRange>> ranges;
};

inline Dataset read_dataset_csv(const std::filesystem::path& path, const CsvSchema& schema = {}) {
    const std::string file = path.string();
    auto table = detail::parse_numeric_csv(read_file(path), file);
    if (table.header.size() < 2) throw ParseError(file, 1, 0, "need at least one input column and one output column");
    if (table.rows.empty()) throw ParseError(file, 2, 0, "no data rows");
    const auto d = static_cast<Eigen::Index>(table.header.size() - 1);
    const auto n = static_cast<Eigen::Index>(table.rows.size());

    std::vector<std::size_t> column_of(static_cast<std::size_t>(d));
    for (std::size_t k = 0; k < column_of.size(); ++k) column_of[k] = k;
    if (schema.ranges) {
        const auto& ranges = *schema.ranges;
        if (static_cast<Eigen::Index>(ranges.size()) != d)
            throw ParseError(file, 1, 0, "header has " + std::to_string(d) + " input columns but " + std::to_string(ranges.size()) +
                                             " parameter ranges were given");
        for (std::size_t k = 0; k < ranges.size(); ++k) {
            std::size_t col = table.header.size();
            for (std::size_t c = 0; c + 1 < table.header.size(); ++c)
                if (table.header[c] == ranges[k].name) col = c;
            if (col == table.header.size()) throw ParseError(file, 1, 0, "no input column named '" + ranges[k].name + "'");
            column_of[k] = col;
        }
    }

    Dataset data(Eigen::MatrixXd(n, d), Eigen::VectorXd(n));
    Eigen::VectorXd theta(d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        for (Eigen::Index k = 0; k < d; ++k) theta(k) = row[column_of[static_cast<std::size_t>(k)]];
        if (schema.ranges) {
            try {
                data.inputs.row(i) = uniform_to_gaussian(theta, *schema.ranges).transpose();
            } catch (const ArgumentError& e) {
                throw ParseError(file, static_cast<std::size_t>(i) + 2, 0, e.what());
            }
        } else {
            data.inputs.row(i) = theta.transpose();
        }
        data.outputs(i) = row.back();
    }
    return data;
}

inline std::string dataset_csv_text(const Dataset& data, const std::vector<std::string>& input_names = {}, const std::string& output_name = "u") {
    std::string out;
    for (Eigen::Index k = 0; k < data.dimension(); ++k)
        out += (input_names.empty() ? "xi_" + std::to_string(k + 1) : input_names[static_cast<std::size_t>(k)]) + ",";
    out += output_name + "\n";
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        for (Eigen::Index k = 0; k < data.dimension(); ++k) out += format_real(data.inputs(i, k)) + ",";
        out += format_real(data.outputs(i)) + "\n";
    }
    return out;
}

inline void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
    write_file_atomic(path, dataset_csv_text(data));
}

/// Writes physical values lower + (upper - lower) Phi(xi) under the range names.
inline void write_physical_dataset_csv(const Dataset& data, const std::vector<ParameterRange>& ranges, const std::filesystem::path& path) {
    if (static_cast<Eigen::Index>(ranges.size()) != data.dimension())
        throw ArgumentError("write_physical_dataset_csv: range count does not match the input dimension");
    Dataset physical = data;
    for (Eigen::Index i = 0; i < data.size(); ++i)
        physical.inputs.row(i) = gaussian_to_uniform(data.inputs.row(i).transpose(), ranges).transpose();
    std::vector<std::string> names;
    for (const auto& r : ranges) names.push_back(r.name);
    write_file_atomic(path, dataset_csv_text(physical, names));
}

/// Input-only matrix (all columns are inputs).
inline Eigen::MatrixXd read_points_csv(const std::filesystem::path& path) {
    const auto table = detail::parse_numeric_csv(read_file(path), path.string());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(table.header.size()));
    for (std::size_t i = 0; i < table.rows.size(); ++i)
        for (std::size_t k = 0; k < table.header.size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = table.rows[i][k];
    return m;
}

/// 64-bit FNV-1a of a byte string, hex encoded; identifies dataset files in run manifests.
inline std::string fnv1a_digest(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace adaptpc
