#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace clab {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Error categories map onto distinct CLI exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* category() const noexcept { return "error"; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "config"; }
};

class DataError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "data"; }
};

class AlgorithmError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "algorithm"; }
};

class OutputError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "output"; }
};

/// Feature table with optional per-row class ids.
///
/// `labels`, when present, holds 0-based ids in [0, num_classes). `class_names`
/// keeps the raw class tokens in id order so a round trip can restore them.
struct DataMatrix {
    Matrix values;
    std::optional<std::vector<int>> labels;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;

    std::size_t n() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t d() const { return static_cast<std::size_t>(values.cols()); }
    std::size_t num_classes() const { return class_names.size(); }
    bool has_labels() const { return labels.has_value(); }

    // Throws DataError when an invariant is broken.
    void validate() const
    {
        if (values.rows() < 1) throw DataError("no data rows");
        if (values.cols() < 1) throw DataError("no feature columns");
        for (Eigen::Index i = 0; i < values.rows(); ++i)
            for (Eigen::Index j = 0; j < values.cols(); ++j)
                if (!std::isfinite(values(i, j)))
                    throw DataError("row " + std::to_string(i) + ", column " + std::to_string(j) +
                                    ": value is not finite");
        if (labels) {
            if (labels->size() != n())
                throw DataError("label count " + std::to_string(labels->size()) +
                                " does not match row count " + std::to_string(n()));
            for (std::size_t i = 0; i < labels->size(); ++i) {
                int c = (*labels)[i];
                if (c < 0 || static_cast<std::size_t>(c) >= num_classes())
                    throw DataError("row " + std::to_string(i) + ": class id out of range");
            }
        }
        if (!feature_names.empty() && feature_names.size() != d())
            throw DataError("feature name count does not match column count");
    }
};

/// Hard cluster membership: index[i] in [0, k).
struct Assignment {
    std::size_t k = 0;
    std::vector<std::size_t> index;

    std::size_t size() const { return index.size(); }

    std::vector<std::size_t> counts() const
    {
        std::vector<std::size_t> c(k, 0);
        for (auto j : index) ++c[j];
        return c;
    }

    friend bool operator==(const Assignment&, const Assignment&) = default;
};

inline std::span<const double> row_span(const Matrix& m, Eigen::Index i)
{
    return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline double squared_distance(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double t = a[j] - b[j];
        s += t * t;
    }
    return s;
}

inline double squared_distance(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j)
{
    return squared_distance(row_span(a, i), row_span(b, j));
}

/// Largest pairwise Euclidean distance between rows. Quadratic in n.
inline double diameter(const Matrix& points)
{
    double best = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        for (Eigen::Index j = i + 1; j < points.rows(); ++j)
            best = std::max(best, squared_distance(points, i, points, j));
    return std::sqrt(best);
}

/// Builds a matrix from nested initializer rows; convenient for small fixtures.
inline Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows)
{
    if (rows.empty()) return Matrix(0, 0);
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw DataError("ragged rows");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

inline void check_assignment(const Matrix& points, const Assignment& a)
{
    if (a.index.size() != static_cast<std::size_t>(points.rows()))
        throw DataError("assignment length " + std::to_string(a.index.size()) +
                        " does not match row count " + std::to_string(points.rows()));
    for (auto j : a.index)
        if (j >= a.k) throw DataError("assignment entry out of range");
}

}  // namespace clab
