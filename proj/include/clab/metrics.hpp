#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "clab/core.hpp"

namespace clab {

struct PurityResult {
    double purity = 0.0;
    std::size_t dominant_count = 0;
    std::vector<std::size_t> per_cluster;  // dominant-class member count per cluster
    std::vector<int> dominant_class;       // -1 for an empty cluster
};

struct ClusterMeans {
    Matrix per_feature;                // k x d
    std::vector<double> grand;         // mean over all members and all features
    std::vector<bool> empty;
};

struct MetricsReport {
    std::optional<double> purity;
    std::optional<std::size_t> dominant_count;
    std::optional<double> class_entropy;
    std::optional<std::size_t> ones_count;
    double norm_entropy = 0.0;
    std::vector<std::size_t> cluster_sizes;
    ClusterMeans cluster_means;
    Matrix intercluster;
    double wall_time_seconds = 0.0;
};

namespace detail {

inline std::size_t class_count(std::span<const int> labels)
{
    int top = -1;
    for (int c : labels) {
        if (c < 0) throw DataError("negative class label");
        top = std::max(top, c);
    }
    return static_cast<std::size_t>(top + 1);
}

// table[j][c] = members of cluster j with class c
inline std::vector<std::vector<std::size_t>> contingency(const Assignment& a, std::span<const int> labels)
{
    if (labels.size() != a.index.size())
        throw DataError("label count " + std::to_string(labels.size()) + " does not match assignment length " +
                        std::to_string(a.index.size()));
    const auto classes = class_count(labels);
    std::vector<std::vector<std::size_t>> t(a.k, std::vector<std::size_t>(classes, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) ++t.at(a.index[i])[static_cast<std::size_t>(labels[i])];
    return t;
}

inline double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace detail

/// Fraction of rows that belong to the dominant class of their cluster.
inline PurityResult purity(const Assignment& a, std::span<const int> labels)
{
    const auto table = detail::contingency(a, labels);
    PurityResult r;
    for (const auto& row : table) {
        std::size_t best = 0;
        int cls = -1;
        for (std::size_t c = 0; c < row.size(); ++c)
            if (row[c] > best) {
                best = row[c];
                cls = static_cast<int>(c);
            }
        r.per_cluster.push_back(best);
        r.dominant_class.push_back(cls);
        r.dominant_count += best;
    }
    r.purity = labels.empty() ? 0.0 : static_cast<double>(r.dominant_count) / static_cast<double>(labels.size());
    return r;
}

/// Cluster-size entropy divided by ln K; 0 when K == 1.
inline double normalized_entropy(std::span<const std::size_t> sizes)
{
    if (sizes.size() <= 1) return 0.0;
    double total = 0.0;
    for (auto s : sizes) total += static_cast<double>(s);
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (auto s : sizes) h -= detail::plogp(static_cast<double>(s) / total);
    return h / std::log(static_cast<double>(sizes.size()));
}

inline double normalized_entropy(const Assignment& a)
{
    const auto c = a.counts();
    return normalized_entropy(c);
}

/// Size-weighted mean of per-cluster class entropies, in nats.
inline double class_entropy(const Assignment& a, std::span<const int> labels)
{
    const auto table = detail::contingency(a, labels);
    const double n = static_cast<double>(labels.size());
    double total = 0.0;
    for (const auto& row : table) {
        double nj = 0.0;
        for (auto c : row) nj += static_cast<double>(c);
        if (nj == 0.0) continue;
        double h = 0.0;
        for (auto c : row) h -= detail::plogp(static_cast<double>(c) / nj);
        total += (nj / n) * h;
    }
    return total;
}

inline ClusterMeans cluster_means(const Matrix& points, const Assignment& a)
{
    check_assignment(points, a);
    ClusterMeans r;
    r.per_feature = Matrix::Zero(static_cast<Eigen::Index>(a.k), points.cols());
    const auto counts = a.counts();
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        r.per_feature.row(static_cast<Eigen::Index>(a.index[static_cast<std::size_t>(i)])) += points.row(i);
    for (std::size_t j = 0; j < a.k; ++j) {
        const auto jr = static_cast<Eigen::Index>(j);
        r.empty.push_back(counts[j] == 0);
        if (counts[j] > 0) r.per_feature.row(jr) /= static_cast<double>(counts[j]);
        r.grand.push_back(r.per_feature.row(jr).mean());
    }
    return r;
}

/// Pairwise Euclidean distances between centroid rows.
inline Matrix intercluster_distances(const Matrix& centroids)
{
    const auto k = centroids.rows();
    Matrix d = Matrix::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = i + 1; j < k; ++j) d(i, j) = d(j, i) = std::sqrt(squared_distance(centroids, i, centroids, j));
    return d;
}

/// Cells >= threshold among each cluster's dominant-class members, summed over clusters.
inline std::size_t dominant_ones_count(const Matrix& points, const Assignment& a, std::span<const int> labels,
                                       double threshold = 0.5)
{
    const auto p = purity(a, labels);
    std::size_t ones = 0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const auto j = a.index[static_cast<std::size_t>(i)];
        if (labels[static_cast<std::size_t>(i)] != p.dominant_class[j]) continue;
        for (Eigen::Index c = 0; c < points.cols(); ++c)
            if (points(i, c) >= threshold) ++ones;
    }
    return ones;
}

/// Every metric for one clustering. Label-dependent fields stay empty without labels.
inline MetricsReport compute_metrics(const Matrix& points, const std::optional<std::vector<int>>& labels,
                                     const Assignment& a, const Matrix& centers, bool with_ones_count = false)
{
    MetricsReport r;
    r.cluster_sizes = a.counts();
    r.norm_entropy = normalized_entropy(r.cluster_sizes);
    r.cluster_means = cluster_means(points, a);
    r.intercluster = intercluster_distances(centers);
    if (labels) {
        const auto p = purity(a, *labels);
        r.purity = p.purity;
        r.dominant_count = p.dominant_count;
        r.class_entropy = class_entropy(a, *labels);
        if (with_ones_count) r.ones_count = dominant_ones_count(points, a, *labels);
    }
    return r;
}

}  // namespace clab
