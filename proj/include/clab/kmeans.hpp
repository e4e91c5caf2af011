#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "clab/core.hpp"
#include "clab/dataset.hpp"
#include "clab/rng.hpp"

namespace clab {

struct KMeansOptions {
    std::size_t max_iters = 300;
    double tol = 1e-8;
};

struct CentroidModel {
    std::size_t k = 0;
    Matrix centroids;
    std::vector<std::size_t> counts;
    double sse = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    // SSE of each assignment step, starting with the assignment to the initial centroids.
    std::vector<double> sse_trace;
};

struct KMeansResult {
    CentroidModel model;
    Assignment assignment;
};

/// Nearest centroid by squared Euclidean distance; ties go to the lowest index.
inline Assignment assign_nearest(const Matrix& points, const Matrix& centroids)
{
    if (centroids.rows() < 1) throw ConfigError("assign_nearest: need at least one centroid");
    if (centroids.cols() != points.cols())
        throw DataError("assign_nearest: centroid dimension " + std::to_string(centroids.cols()) +
                        " does not match data dimension " + std::to_string(points.cols()));
    Assignment a{static_cast<std::size_t>(centroids.rows()), std::vector<std::size_t>(static_cast<std::size_t>(points.rows()))};
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
            const double dist = squared_distance(points, i, centroids, j);
            if (dist < best_d) {
                best_d = dist;
                best = static_cast<std::size_t>(j);
            }
        }
        a.index[static_cast<std::size_t>(i)] = best;
    }
    return a;
}

inline double assignment_sse(const Matrix& points, const Matrix& centroids, const Assignment& a)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        s += squared_distance(points, i, centroids, static_cast<Eigen::Index>(a.index[static_cast<std::size_t>(i)]));
    return s;
}

namespace detail {

inline Matrix member_means(const Matrix& points, const Assignment& a, std::vector<std::size_t>& counts)
{
    Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(a.k), points.cols());
    counts.assign(a.k, 0);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const auto j = a.index[static_cast<std::size_t>(i)];
        sums.row(static_cast<Eigen::Index>(j)) += points.row(i);
        ++counts[j];
    }
    for (std::size_t j = 0; j < a.k; ++j)
        if (counts[j] > 0) sums.row(static_cast<Eigen::Index>(j)) /= static_cast<double>(counts[j]);
    return sums;
}

}  // namespace detail

/// Per-cluster arithmetic means.
///
/// An empty cluster takes the point that is farthest from its own cluster's
/// mean (among clusters with more than one member); the point is moved in `a`
/// and the donor mean is recomputed. Repeats until no cluster is empty.
inline Matrix recompute_centroids(const Matrix& points, Assignment& a)
{
    check_assignment(points, a);
    if (a.k > static_cast<std::size_t>(points.rows()))
        throw ConfigError("recompute_centroids: more clusters than points");
    std::vector<std::size_t> counts;
    Matrix means = detail::member_means(points, a, counts);
    for (std::size_t empty = 0; empty < a.k; ++empty) {
        if (counts[empty] > 0) continue;
        Eigen::Index far = -1;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            const auto j = a.index[static_cast<std::size_t>(i)];
            if (counts[j] < 2) continue;
            const double dist = squared_distance(points, i, means, static_cast<Eigen::Index>(j));
            if (dist > far_d) {
                far_d = dist;
                far = i;
            }
        }
        a.index[static_cast<std::size_t>(far)] = empty;
        means = detail::member_means(points, a, counts);
    }
    return means;
}

inline double max_row_shift(const Matrix& a, const Matrix& b)
{
    double m = 0.0;
    for (Eigen::Index j = 0; j < a.rows(); ++j) m = std::max(m, (a.row(j) - b.row(j)).norm());
    return m;
}

/// Lloyd iterations from the given initial centroids.
inline KMeansResult lloyd_from(const Matrix& points, Matrix centroids, const KMeansOptions& opt = {})
{
    if (opt.max_iters < 1) throw ConfigError("kmeans: max_iters must be at least 1");
    if (!(opt.tol >= 0.0)) throw ConfigError("kmeans: tol must be non-negative");
    KMeansResult r;
    auto& model = r.model;
    model.k = static_cast<std::size_t>(centroids.rows());

    Assignment a = assign_nearest(points, centroids);
    model.sse_trace.push_back(assignment_sse(points, centroids, a));
    for (std::size_t it = 1; it <= opt.max_iters; ++it) {
        Matrix next = recompute_centroids(points, a);
        const double shift = max_row_shift(next, centroids);
        centroids = std::move(next);
        Assignment next_a = assign_nearest(points, centroids);
        model.sse_trace.push_back(assignment_sse(points, centroids, next_a));
        model.iterations = it;
        const bool stable = next_a == a;
        a = std::move(next_a);
        if (stable || shift <= opt.tol) {
            model.converged = true;
            break;
        }
    }
    model.centroids = std::move(centroids);
    model.counts = a.counts();
    model.sse = model.sse_trace.back();
    r.assignment = std::move(a);
    return r;
}

/// Lloyd's k-means seeded with k distinct data rows.
inline KMeansResult lloyd_run(const Matrix& points, std::size_t k, RngStream& rng, const KMeansOptions& opt = {})
{
    if (k < 1) throw ConfigError("kmeans: k must be at least 1");
    if (k > static_cast<std::size_t>(points.rows()))
        throw ConfigError("kmeans: k=" + std::to_string(k) + " exceeds row count " + std::to_string(points.rows()));
    return lloyd_from(points, sample_distinct_rows(points, k, rng), opt);
}

/// Lowest-SSE result over `restarts` runs; restart r draws from base.substream(r).
inline KMeansResult lloyd_best_of(const Matrix& points, std::size_t k, const RngStream& base, std::size_t restarts,
                                  const KMeansOptions& opt = {})
{
    if (restarts < 1) throw ConfigError("kmeans: restarts must be at least 1");
    KMeansResult best;
    for (std::size_t r = 0; r < restarts; ++r) {
        RngStream rng = base.substream(r);
        auto cur = lloyd_run(points, k, rng, opt);
        if (r == 0 || cur.model.sse < best.model.sse) best = std::move(cur);
    }
    return best;
}

}  // namespace clab
