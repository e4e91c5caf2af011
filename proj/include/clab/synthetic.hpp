#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "clab/core.hpp"
#include "clab/rng.hpp"

namespace clab {

/// Isotropic Gaussian blobs, `per_cluster` rows each, labelled by blob index.
/// Rows are emitted blob by blob.
inline DataMatrix gaussian_blobs(const std::vector<std::vector<double>>& centers, double sigma, std::size_t per_cluster,
                                 RngStream& rng)
{
    if (centers.empty() || per_cluster == 0) throw ConfigError("gaussian_blobs: empty request");
    const auto d = centers.front().size();
    DataMatrix m;
    m.values.resize(static_cast<Eigen::Index>(centers.size() * per_cluster), static_cast<Eigen::Index>(d));
    std::vector<int> labels;
    Eigen::Index r = 0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
        for (std::size_t p = 0; p < per_cluster; ++p, ++r) {
            for (std::size_t j = 0; j < d; ++j) m.values(r, static_cast<Eigen::Index>(j)) = centers[c][j] + sigma * rng.normal();
            labels.push_back(static_cast<int>(c));
        }
        m.class_names.push_back(std::to_string(c));
    }
    m.labels = std::move(labels);
    return m;
}

/// Table with the shape of the SPECTF heart data: integer-valued features in
/// [0, 100] and a binary diagnosis, about 79% of rows in class 1.
/// Class 1 rows draw from a lower-mean profile than class 0 rows.
inline DataMatrix spectf_like(RngStream& rng, std::size_t rows = 267, std::size_t features = 44)
{
    DataMatrix m;
    m.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(features));
    std::vector<double> base(features);
    for (auto& b : base) b = 60.0 + 15.0 * rng.uniform01();
    std::vector<int> labels(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        const int cls = rng.uniform01() < 212.0 / 267.0 ? 1 : 0;
        labels[i] = cls;
        const double shift = cls == 1 ? -6.0 : 4.0;
        const double patient = 5.0 * rng.normal();
        for (std::size_t j = 0; j < features; ++j) {
            const double v = base[j] + shift + patient + 7.0 * rng.normal();
            m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::clamp(std::round(v), 0.0, 100.0);
        }
    }
    for (std::size_t j = 0; j < features; ++j) m.feature_names.push_back("F" + std::to_string(j + 1));
    m.labels = std::move(labels);
    m.class_names = {"0", "1"};
    return m;
}

}  // namespace clab
