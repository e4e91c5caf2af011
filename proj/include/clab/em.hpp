#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "clab/core.hpp"
#include "clab/dataset.hpp"
#include "clab/kmeans.hpp"
#include "clab/rng.hpp"

namespace clab {

enum class MStepVariant {
    standard,      // responsibility-weighted average
    paper_literal  // (1/n) * sum_i r_ij x_i
};

enum class Sigma2Mode { fixed, data_variance };

struct EmOptions {
    Sigma2Mode sigma2_mode = Sigma2Mode::data_variance;
    double sigma2 = 1.0;  // used when sigma2_mode == fixed
    MStepVariant variant = MStepVariant::standard;
    std::size_t max_iters = 300;
    double tol = 1e-8;
};

/// Shared-variance isotropic mixture with uniform weights.
struct GmmIsoModel {
    std::size_t k = 0;
    Matrix means;
    double sigma2 = 1.0;
    Matrix responsibilities;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> loglik_trace;
};

/// Mean over columns of the population variance of each column.
inline double mean_column_variance(const Matrix& points)
{
    const double n = static_cast<double>(points.rows());
    double total = 0.0;
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
        const double mu = points.col(j).sum() / n;
        total += (points.col(j).array() - mu).square().sum() / n;
    }
    return total / static_cast<double>(points.cols());
}

/// Posterior memberships with exponent max-subtraction.
inline Matrix e_step(const Matrix& points, const Matrix& means, double sigma2)
{
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw AlgorithmError("em: sigma2 must be positive and finite");
    if (means.cols() != points.cols()) throw DataError("em: mean dimension does not match data dimension");
    const auto k = means.rows();
    Matrix resp(points.rows(), k);
    std::vector<double> expo(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        double top = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < k; ++j) {
            expo[static_cast<std::size_t>(j)] = -squared_distance(points, i, means, j) / (2.0 * sigma2);
            top = std::max(top, expo[static_cast<std::size_t>(j)]);
        }
        double total = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) {
            const double w = std::exp(expo[static_cast<std::size_t>(j)] - top);
            resp(i, j) = w;
            total += w;
        }
        resp.row(i) /= total;
    }
    return resp;
}

/// Mean update. Under `standard`, a component whose responsibility mass is
/// below 1e-12 keeps its row from `previous`.
inline Matrix m_step(const Matrix& points, const Matrix& resp, MStepVariant variant, const Matrix& previous)
{
    if (resp.rows() != points.rows()) throw DataError("em: responsibility rows do not match data rows");
    const Matrix weighted = resp.transpose() * points;
    Matrix means(resp.cols(), points.cols());
    const double n = static_cast<double>(points.rows());
    for (Eigen::Index j = 0; j < resp.cols(); ++j) {
        if (variant == MStepVariant::paper_literal) {
            means.row(j) = weighted.row(j) / n;
            continue;
        }
        const double mass = resp.col(j).sum();
        if (mass < 1e-12) {
            if (previous.rows() != resp.cols()) throw AlgorithmError("em: starved component with no previous mean");
            means.row(j) = previous.row(j);
        } else {
            means.row(j) = weighted.row(j) / mass;
        }
    }
    return means;
}

inline Matrix m_step(const Matrix& points, const Matrix& resp, MStepVariant variant = MStepVariant::standard)
{
    return m_step(points, resp, variant, Matrix(0, points.cols()));
}

/// sum_i ln sum_j (1/k) N(x_i; mu_j, sigma2 I)
inline double iso_log_likelihood(const Matrix& points, const Matrix& means, double sigma2)
{
    const double d = static_cast<double>(points.cols());
    const double k = static_cast<double>(means.rows());
    const double norm = -0.5 * d * std::log(2.0 * std::numbers::pi * sigma2) - std::log(k);
    double total = 0.0;
    std::vector<double> expo(static_cast<std::size_t>(means.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        double top = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < means.rows(); ++j) {
            expo[static_cast<std::size_t>(j)] = -squared_distance(points, i, means, j) / (2.0 * sigma2);
            top = std::max(top, expo[static_cast<std::size_t>(j)]);
        }
        double s = 0.0;
        for (double e : expo) s += std::exp(e - top);
        total += norm + top + std::log(s);
    }
    return total;
}

/// EM from the given initial means with a fixed sigma2.
///
/// Each iteration runs one E-step and one M-step, then records the
/// log-likelihood at the updated means. Stops once the largest mean
/// displacement is <= tol or after max_iters.
inline GmmIsoModel em_from(const Matrix& points, Matrix means, double sigma2, MStepVariant variant,
                           std::size_t max_iters, double tol)
{
    if (max_iters < 1) throw ConfigError("em: max_iters must be at least 1");
    if (!(tol >= 0.0)) throw ConfigError("em: tol must be non-negative");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw AlgorithmError("em: sigma2 must be positive and finite");
    GmmIsoModel model;
    model.k = static_cast<std::size_t>(means.rows());
    model.sigma2 = sigma2;
    for (std::size_t it = 1; it <= max_iters; ++it) {
        const Matrix resp = e_step(points, means, sigma2);
        Matrix next = m_step(points, resp, variant, means);
        const double shift = max_row_shift(next, means);
        means = std::move(next);
        model.loglik_trace.push_back(iso_log_likelihood(points, means, sigma2));
        model.iterations = it;
        if (shift <= tol) {
            model.converged = true;
            break;
        }
    }
    model.responsibilities = e_step(points, means, sigma2);
    model.means = std::move(means);
    return model;
}

inline double resolve_sigma2(const Matrix& points, const EmOptions& opt)
{
    if (opt.sigma2_mode == Sigma2Mode::fixed) return opt.sigma2;
    const double v = mean_column_variance(points);
    if (!(v > 0.0)) throw AlgorithmError("em: data variance is zero; supply a fixed sigma2");
    return v;
}

inline GmmIsoModel em_run(const Matrix& points, std::size_t k, RngStream& rng, const EmOptions& opt = {})
{
    if (k < 1) throw ConfigError("em: k must be at least 1");
    if (k > static_cast<std::size_t>(points.rows()))
        throw ConfigError("em: k=" + std::to_string(k) + " exceeds row count " + std::to_string(points.rows()));
    const double sigma2 = resolve_sigma2(points, opt);
    return em_from(points, sample_distinct_rows(points, k, rng), sigma2, opt.variant, opt.max_iters, opt.tol);
}

/// Argmax responsibility per row; ties go to the lowest index.
inline Assignment hard_assign(const Matrix& resp)
{
    Assignment a{static_cast<std::size_t>(resp.cols()), std::vector<std::size_t>(static_cast<std::size_t>(resp.rows()))};
    for (Eigen::Index i = 0; i < resp.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < resp.cols(); ++j)
            if (resp(i, j) > resp(i, best)) best = j;
        a.index[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
    }
    return a;
}

inline Assignment hard_assign(const GmmIsoModel& model) { return hard_assign(model.responsibilities); }

}  // namespace clab
