#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clab/core.hpp"
#include "clab/dataset.hpp"
#include "clab/rng.hpp"

namespace clab {

// Rival-penalized k*-means in two phases:
//
//  1. Frequency-sensitive competitive learning (FSCL) spreads the k seeds
//     over the data. The winner for x minimises lambda_r * ||x - m_r|| with
//     lambda_r = n_r / sum_i n_i, and moves by eta * (x - m_w).
//  2. Penalized competition. The winner minimises
//         p_j(x) = 1/2 (x - m_j)' S_j^-1 (x - m_j) + 1/2 ln det S_j - ln alpha_j
//     and moves by eta * S_w^-1 (x - m_w). After every row the weights move
//     towards the winner indicator, alpha_j += eta * (I(j|x) - alpha_j), so a
//     seed that stops winning loses weight geometrically and starves.
//
// Both phases visit the rows in a freshly shuffled order every epoch and stop
// after an epoch in which no row changed its winner.

enum class KStarPhase { fscl, penalized, converged };

inline const char* to_string(KStarPhase p)
{
    switch (p) {
    case KStarPhase::fscl: return "fscl";
    case KStarPhase::penalized: return "penalized";
    case KStarPhase::converged: return "converged";
    }
    return "?";
}

struct KStarOptions {
    double eta = 0.05;
    std::size_t max_epochs = 100;  // per phase
    double reg_eps = 1e-6;
};

struct KStarModel {
    std::size_t k = 0;
    Matrix means;
    std::vector<double> alphas;
    std::vector<Matrix> covariances;
    // Cumulative wins over both phases; starts at 1 per seed.
    std::vector<std::uint64_t> win_counts;
    double eta = 0.05;
    KStarPhase phase = KStarPhase::fscl;

    // Winner of each row in the last FSCL epoch.
    std::vector<std::size_t> fscl_winners;
    std::size_t fscl_epochs = 0;
    bool fscl_converged = false;
    std::size_t penalized_epochs = 0;
    bool penalized_converged = false;
    // Upper bound on the norm of a single penalized mean update.
    double step_bound = std::numeric_limits<double>::infinity();
};

struct KStarResult {
    KStarModel model;
    Assignment assignment;
    std::size_t surviving = 0;  // clusters with at least one member
};

/// argmin_r lambda_r * ||x - m_r||, ties to the lowest index.
inline std::size_t fscl_winner(std::span<const double> x, const KStarModel& model)
{
    double total = 0.0;
    for (auto c : model.win_counts) total += static_cast<double>(c);
    std::size_t best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < model.means.rows(); ++r) {
        const double lambda = static_cast<double>(model.win_counts[static_cast<std::size_t>(r)]) / total;
        const double cost = lambda * std::sqrt(squared_distance(x, row_span(model.means, r)));
        if (cost < best_cost) {
            best_cost = cost;
            best = static_cast<std::size_t>(r);
        }
    }
    return best;
}

inline KStarModel fscl_phase(const Matrix& points, std::size_t k, RngStream& rng, double eta, std::size_t max_epochs)
{
    if (k < 1) throw ConfigError("kstar: k must be at least 1");
    if (!(eta >= 0.0 && eta < 1.0)) throw ConfigError("kstar: eta must lie in [0, 1)");
    if (max_epochs < 1) throw ConfigError("kstar: max_epochs must be at least 1");

    KStarModel model;
    model.k = k;
    model.eta = eta;
    model.means = sample_distinct_rows(points, k, rng);
    model.win_counts.assign(k, 1);
    model.alphas.assign(k, 1.0 / static_cast<double>(k));

    const auto n = static_cast<std::size_t>(points.rows());
    std::vector<std::size_t> winners(n, k);
    for (std::size_t epoch = 1; epoch <= max_epochs; ++epoch) {
        bool changed = false;
        for (auto i : rng.permutation(n)) {
            const auto x = row_span(points, static_cast<Eigen::Index>(i));
            const auto w = fscl_winner(x, model);
            const auto wr = static_cast<Eigen::Index>(w);
            model.means.row(wr) += eta * (points.row(static_cast<Eigen::Index>(i)) - model.means.row(wr));
            ++model.win_counts[w];
            if (winners[i] != w) changed = true;
            winners[i] = w;
        }
        model.fscl_epochs = epoch;
        if (!changed) {
            model.fscl_converged = true;
            break;
        }
    }
    model.fscl_winners = std::move(winners);
    return model;
}

namespace detail {

inline Matrix scatter_covariance(const Matrix& points, std::span<const std::size_t> members)
{
    const auto d = points.cols();
    Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(d);
    for (auto i : members) mu += points.row(static_cast<Eigen::Index>(i));
    mu /= static_cast<double>(members.size());
    Matrix cov = Matrix::Zero(d, d);
    for (auto i : members) {
        const Eigen::RowVectorXd c = points.row(static_cast<Eigen::Index>(i)) - mu;
        cov.noalias() += c.transpose() * c;
    }
    cov /= static_cast<double>(members.size());
    return 0.5 * (cov + cov.transpose());
}

// Adds eps * (trace / d) * I. Returns nullopt for a zero-trace input.
inline std::optional<Matrix> regularized(Matrix cov, double eps)
{
    const double scale = cov.trace() / static_cast<double>(cov.rows());
    if (!(scale > 0.0) || !std::isfinite(scale)) return std::nullopt;
    cov.diagonal().array() += eps * scale;
    return cov;
}

struct CostFactor {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double half_logdet = 0.0;
    double neg_log_alpha = 0.0;
};

inline CostFactor factor(const Matrix& cov, double alpha, std::size_t cluster)
{
    CostFactor f;
    f.llt.compute(cov);
    if (f.llt.info() != Eigen::Success)
        throw AlgorithmError("kstar: covariance of cluster " + std::to_string(cluster) + " is singular");
    const auto& L = f.llt.matrixL();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < cov.rows(); ++i) {
        const double dii = L(i, i);
        if (!(dii > 0.0)) throw AlgorithmError("kstar: covariance of cluster " + std::to_string(cluster) + " is singular");
        logdet += 2.0 * std::log(dii);
    }
    f.half_logdet = 0.5 * logdet;
    f.neg_log_alpha = alpha > 0.0 ? -std::log(alpha) : std::numeric_limits<double>::infinity();
    return f;
}

inline double factored_cost(const Eigen::VectorXd& diff, const CostFactor& f)
{
    const Eigen::VectorXd y = f.llt.matrixL().solve(diff);
    return 0.5 * y.squaredNorm() + f.half_logdet + f.neg_log_alpha;
}

inline Eigen::VectorXd row_vector(std::span<const double> x)
{
    return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

}  // namespace detail

/// 1/2 (x - m_j)' S_j^-1 (x - m_j) + 1/2 ln det S_j - ln alpha_j
inline double penalized_cost(std::span<const double> x, std::size_t j, const KStarModel& model)
{
    if (j >= model.k) throw ConfigError("kstar: cluster index out of range");
    const auto f = detail::factor(model.covariances.at(j), model.alphas.at(j), j);
    const Eigen::VectorXd diff = detail::row_vector(x) - model.means.row(static_cast<Eigen::Index>(j)).transpose();
    return detail::factored_cost(diff, f);
}

/// Hard winner under the penalized cost for every row of `points`.
inline Assignment penalized_assign(const Matrix& points, const KStarModel& model)
{
    std::vector<detail::CostFactor> factors;
    for (std::size_t j = 0; j < model.k; ++j) factors.push_back(detail::factor(model.covariances[j], model.alphas[j], j));
    Assignment a{model.k, std::vector<std::size_t>(static_cast<std::size_t>(points.rows()))};
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < model.k; ++j) {
            const Eigen::VectorXd diff = (points.row(i) - model.means.row(static_cast<Eigen::Index>(j))).transpose();
            const double c = detail::factored_cost(diff, factors[j]);
            if (c < best) {
                best = c;
                a.index[static_cast<std::size_t>(i)] = j;
            }
        }
    }
    return a;
}

/// Covariance of the given rows plus eps * (trace / d) * I.
/// Falls back to `fallback` when there are fewer than two rows or the scatter is zero.
inline Matrix member_covariance(const Matrix& points, std::span<const std::size_t> members, double eps,
                                const Matrix& fallback)
{
    if (members.size() < 2) return fallback;
    auto reg = detail::regularized(detail::scatter_covariance(points, members), eps);
    return reg ? *reg : fallback;
}

namespace detail {

inline constexpr double alpha_floor = 1e-300;

// alpha <- (1 - rate) * alpha + rate * e_w, floored and renormalised onto the simplex.
inline void reinforce_alphas(std::vector<double>& alphas, std::size_t w, double rate)
{
    double total = 0.0;
    for (std::size_t j = 0; j < alphas.size(); ++j) {
        alphas[j] = std::max((1.0 - rate) * alphas[j] + (j == w ? rate : 0.0), alpha_floor);
        total += alphas[j];
    }
    for (auto& a : alphas) a /= total;
}

inline std::vector<std::vector<std::size_t>> members_of(std::span<const std::size_t> winners, std::size_t k)
{
    std::vector<std::vector<std::size_t>> m(k);
    for (std::size_t i = 0; i < winners.size(); ++i) m[winners[i]].push_back(i);
    return m;
}

inline Matrix global_covariance(const Matrix& points, double eps)
{
    std::vector<std::size_t> all(static_cast<std::size_t>(points.rows()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    if (all.size() >= 2)
        if (auto reg = regularized(scatter_covariance(points, all), eps)) return *reg;
    return Matrix::Identity(points.cols(), points.cols());
}

}  // namespace detail

/// Penalized competition phase starting from an FSCL model.
inline KStarResult penalized_phase(const Matrix& points, KStarModel model, RngStream& rng, double eta,
                                   std::size_t max_epochs, double reg_eps = 1e-6)
{
    if (!(eta >= 0.0 && eta < 1.0)) throw ConfigError("kstar: eta must lie in [0, 1)");
    if (max_epochs < 1) throw ConfigError("kstar: max_epochs must be at least 1");
    const std::size_t k = model.k;
    const auto n = static_cast<std::size_t>(points.rows());
    if (model.fscl_winners.size() != n) throw ConfigError("kstar: model does not come from fscl_phase on this data");

    model.eta = eta;
    model.phase = KStarPhase::penalized;
    model.step_bound = eta * diameter(points);

    const Matrix global = detail::global_covariance(points, reg_eps);
    {
        const auto members = detail::members_of(model.fscl_winners, k);
        model.covariances.clear();
        for (std::size_t j = 0; j < k; ++j)
            model.covariances.push_back(member_covariance(points, members[j], reg_eps, global));
    }
    model.alphas.assign(k, 1.0 / static_cast<double>(k));

    std::vector<std::size_t> winners(n, k);
    for (std::size_t epoch = 1; epoch <= max_epochs; ++epoch) {
        std::vector<detail::CostFactor> factors;
        factors.reserve(k);
        for (std::size_t j = 0; j < k; ++j) factors.push_back(detail::factor(model.covariances[j], 1.0, j));

        bool changed = false;
        for (auto i : rng.permutation(n)) {
            const auto ir = static_cast<Eigen::Index>(i);
            std::size_t w = 0;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < k; ++j) {
                const Eigen::VectorXd diff = (points.row(ir) - model.means.row(static_cast<Eigen::Index>(j))).transpose();
                const double c = detail::factored_cost(diff, factors[j]) - std::log(model.alphas[j]);
                if (c < best) {
                    best = c;
                    w = j;
                }
            }
            const auto wr = static_cast<Eigen::Index>(w);
            const Eigen::VectorXd diff = (points.row(ir) - model.means.row(wr)).transpose();
            Eigen::VectorXd step = eta * factors[w].llt.solve(diff);
            const double norm = step.norm();
            if (norm > model.step_bound) step *= model.step_bound / norm;
            model.means.row(wr) += step.transpose();

            ++model.win_counts[w];
            detail::reinforce_alphas(model.alphas, w, eta);

            if (winners[i] != w) changed = true;
            winners[i] = w;
        }
        model.penalized_epochs = epoch;

        const auto members = detail::members_of(winners, k);
        for (std::size_t j = 0; j < k; ++j)
            model.covariances[j] = member_covariance(points, members[j], reg_eps, model.covariances[j]);

        if (!changed) {
            model.penalized_converged = true;
            break;
        }
    }
    model.phase = model.penalized_converged ? KStarPhase::converged : KStarPhase::penalized;

    KStarResult r;
    r.assignment = Assignment{k, std::move(winners)};
    for (auto c : r.assignment.counts())
        if (c > 0) ++r.surviving;
    r.model = std::move(model);
    return r;
}

inline KStarResult kstar_run(const Matrix& points, std::size_t k, RngStream& rng, const KStarOptions& opt = {})
{
    if (k < 1) throw ConfigError("kstar: k must be at least 1");
    if (k > static_cast<std::size_t>(points.rows()))
        throw ConfigError("kstar: k=" + std::to_string(k) + " exceeds row count " + std::to_string(points.rows()));
    auto model = fscl_phase(points, k, rng, opt.eta, opt.max_epochs);
    return penalized_phase(points, std::move(model), rng, opt.eta, opt.max_epochs, opt.reg_eps);
}

/// Mean over rows of the penalized cost of each row's assigned cluster.
inline double mean_penalized_cost(const Matrix& points, const KStarResult& r)
{
    std::vector<detail::CostFactor> factors;
    for (std::size_t j = 0; j < r.model.k; ++j)
        factors.push_back(detail::factor(r.model.covariances[j], r.model.alphas[j], j));
    double total = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const auto j = r.assignment.index[static_cast<std::size_t>(i)];
        const Eigen::VectorXd diff = (points.row(i) - r.model.means.row(static_cast<Eigen::Index>(j))).transpose();
        total += detail::factored_cost(diff, factors[j]);
    }
    return total / static_cast<double>(points.rows());
}

/// Clusters with alpha >= min_alpha and at least one member.
inline std::size_t count_active(const KStarResult& r, double min_alpha)
{
    const auto c = r.assignment.counts();
    std::size_t active = 0;
    for (std::size_t j = 0; j < r.model.k; ++j)
        if (c[j] > 0 && r.model.alphas[j] >= min_alpha) ++active;
    return active;
}

}  // namespace clab
