#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "clab/core.hpp"
#include "clab/rng.hpp"

namespace clab {

enum class HeaderMode { auto_detect, yes, no };

struct CsvOptions {
    // Column holding the class label. When unset and `labels` is true the last column is used.
    std::optional<std::size_t> class_col;
    bool labels = false;
    HeaderMode header = HeaderMode::auto_detect;

    bool wants_labels() const { return labels || class_col.has_value(); }
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_real(std::string_view s)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::vector<std::string> split_cells(std::string_view line)
{
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        const auto cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        cells.emplace_back(trim(cell));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

}  // namespace detail

/// 17 significant digits, enough to round-trip any double.
inline std::string format_real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Parses comma-separated numeric rows. `source` only decorates error messages.
inline DataMatrix parse_csv(std::istream& in, const CsvOptions& opt = {}, const std::string& source = "<stream>")
{
    struct Line {
        std::size_t number;
        std::vector<std::string> cells;
    };
    std::vector<Line> lines;
    std::string raw;
    for (std::size_t number = 1; std::getline(in, raw); ++number) {
        if (detail::trim(raw).empty()) continue;
        lines.push_back({number, detail::split_cells(raw)});
    }
    if (lines.empty()) throw DataError(source + ": no data rows");

    const std::size_t ncols = lines.front().cells.size();
    std::optional<std::size_t> class_col;
    if (opt.wants_labels()) {
        class_col = opt.class_col.value_or(ncols - 1);
        if (*class_col >= ncols)
            throw DataError(source + ": line " + std::to_string(lines.front().number) + ": class column " +
                            std::to_string(*class_col) + " out of range (" + std::to_string(ncols) +
                            " columns)");
    }
    auto is_feature = [&](std::size_t c) { return !class_col || c != *class_col; };

    bool has_header = opt.header == HeaderMode::yes;
    if (opt.header == HeaderMode::auto_detect) {
        const auto& first = lines.front().cells;
        for (std::size_t c = 0; c < first.size(); ++c)
            if (is_feature(c) && !detail::parse_real(first[c])) has_header = true;
    }

    std::vector<std::string> names;
    std::size_t begin = 0;
    if (has_header) {
        for (std::size_t c = 0; c < ncols; ++c)
            if (is_feature(c)) names.push_back(lines.front().cells[c]);
        begin = 1;
    }
    const std::size_t n = lines.size() - begin;
    if (n == 0) throw DataError(source + ": no data rows");
    const std::size_t d = ncols - (class_col ? 1 : 0);
    if (d == 0) throw DataError(source + ": no feature columns");

    DataMatrix out;
    out.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    out.feature_names = std::move(names);
    std::vector<std::string> raw_labels;
    for (std::size_t r = 0; r < n; ++r) {
        const auto& line = lines[begin + r];
        if (line.cells.size() != ncols)
            throw DataError(source + ": line " + std::to_string(line.number) + ": expected " +
                            std::to_string(ncols) + " columns, found " + std::to_string(line.cells.size()));
        Eigen::Index j = 0;
        for (std::size_t c = 0; c < ncols; ++c) {
            if (!is_feature(c)) {
                raw_labels.push_back(line.cells[c]);
                continue;
            }
            auto v = detail::parse_real(line.cells[c]);
            if (!v || !std::isfinite(*v))
                throw DataError(source + ": line " + std::to_string(line.number) + ", column " +
                                std::to_string(c + 1) + ": non-numeric value '" + line.cells[c] + "'");
            out.values(static_cast<Eigen::Index>(r), j++) = *v;
        }
    }

    if (class_col) {
        // Class ids follow the sorted order of the raw tokens (numeric order when all are numbers).
        std::vector<std::string> distinct = raw_labels;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        const bool numeric = std::all_of(distinct.begin(), distinct.end(),
                                         [](const std::string& s) { return detail::parse_real(s).has_value(); });
        if (numeric)
            std::stable_sort(distinct.begin(), distinct.end(), [](const std::string& a, const std::string& b) {
                return *detail::parse_real(a) < *detail::parse_real(b);
            });
        std::map<std::string, int> id;
        for (std::size_t i = 0; i < distinct.size(); ++i) id[distinct[i]] = static_cast<int>(i);
        std::vector<int> labels(n);
        for (std::size_t r = 0; r < n; ++r) labels[r] = id.at(raw_labels[r]);
        out.labels = std::move(labels);
        out.class_names = std::move(distinct);
    }
    out.validate();
    return out;
}

inline DataMatrix load_csv(const std::filesystem::path& path, const CsvOptions& opt = {})
{
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open file");
    return parse_csv(in, opt, path.string());
}

/// Writes features (and the class column last, if labelled) with 17 significant digits.
inline void write_csv(std::ostream& out, const DataMatrix& m)
{
    if (!m.feature_names.empty()) {
        for (std::size_t j = 0; j < m.d(); ++j) out << (j ? "," : "") << m.feature_names[j];
        if (m.labels) out << ",class";
        out << '\n';
    }
    for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.values.cols(); ++j)
            out << (j ? "," : "") << format_real(m.values(i, j));
        if (m.labels) out << ',' << m.class_names.at(static_cast<std::size_t>((*m.labels)[static_cast<std::size_t>(i)]));
        out << '\n';
    }
}

inline void write_csv(const std::filesystem::path& path, const DataMatrix& m)
{
    std::ofstream out(path);
    if (!out) throw OutputError(path.string() + ": cannot open for writing");
    write_csv(out, m);
    if (!out) throw OutputError(path.string() + ": write failed");
}

/// Column-wise (x - min) / (max - min); constant columns become 0.
inline DataMatrix minmax_normalize(const DataMatrix& m)
{
    DataMatrix out = m;
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
        const double lo = m.values.col(j).minCoeff();
        const double hi = m.values.col(j).maxCoeff();
        const double span = hi - lo;
        for (Eigen::Index i = 0; i < m.values.rows(); ++i)
            out.values(i, j) = span > 0.0 ? (m.values(i, j) - lo) / span : 0.0;
    }
    return out;
}

/// k distinct row indices drawn without replacement (partial Fisher-Yates).
inline std::vector<std::size_t> sample_distinct_indices(std::size_t n, std::size_t k, RngStream& rng)
{
    if (k == 0) throw ConfigError("sample size k must be at least 1");
    if (k > n)
        throw ConfigError("cannot sample " + std::to_string(k) + " distinct rows from " + std::to_string(n));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

inline Matrix sample_distinct_rows(const Matrix& points, std::size_t k, RngStream& rng)
{
    const auto idx = sample_distinct_indices(static_cast<std::size_t>(points.rows()), k, rng);
    Matrix out(static_cast<Eigen::Index>(k), points.cols());
    for (std::size_t i = 0; i < k; ++i) out.row(static_cast<Eigen::Index>(i)) = points.row(static_cast<Eigen::Index>(idx[i]));
    return out;
}

}  // namespace clab
