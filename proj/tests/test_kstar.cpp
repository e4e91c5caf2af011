#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "clab/kmeans.hpp"
#include "clab/kstar.hpp"
#include "clab/synthetic.hpp"

using namespace clab;

namespace {

Matrix col(std::vector<double> v)
{
    Matrix m(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
    return m;
}

KStarModel two_seeds(std::vector<std::uint64_t> wins)
{
    KStarModel m;
    m.k = wins.size();
    m.means = matrix_from_rows({{-1, 0}, {1, 0}});
    m.win_counts = std::move(wins);
    return m;
}

DataMatrix three_blobs(std::uint64_t s)
{
    RngStream rng(1000 + s, 0);
    return gaussian_blobs({{0, 0}, {10, 0}, {0, 10}}, 0.5, 100, rng);
}

}  // namespace

TEST(FsclWinner, Examples)
{
    const std::vector<double> origin{0, 0};
    EXPECT_EQ(fscl_winner(origin, two_seeds({1, 1})), 0u);
    EXPECT_EQ(fscl_winner(origin, two_seeds({4, 1})), 1u);
    const std::vector<double> right{0.9, 0};
    EXPECT_EQ(fscl_winner(right, two_seeds({1, 1})), 1u);

    KStarModel single;
    single.k = 1;
    single.means = matrix_from_rows({{5, 5}});
    single.win_counts = {3};
    EXPECT_EQ(fscl_winner(origin, single), 0u);
}

TEST(FsclWinner, MoreWinsNeverHelp)
{
    RngStream rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        KStarModel m;
        m.k = 4;
        m.means.resize(4, 2);
        for (Eigen::Index i = 0; i < 4; ++i) m.means.row(i) << rng.normal(), rng.normal();
        m.win_counts.resize(4);
        for (auto& w : m.win_counts) w = 1 + rng.uniform_index(20);
        for (int p = 0; p < 10; ++p) {
            const std::vector<double> x{2 * rng.normal(), 2 * rng.normal()};
            const auto before = fscl_winner(x, m);
            for (std::size_t r = 0; r < 4; ++r) {
                if (r == before) continue;
                auto raised = m;
                raised.win_counts[r] += 1 + rng.uniform_index(10);
                EXPECT_NE(fscl_winner(x, raised), r);
            }
        }
    }
}

TEST(Fscl, ZeroEtaFreezesSeeds)
{
    RngStream rng(2);
    const Matrix pts = col({0, 1, 2, 5, 6});
    auto m = fscl_phase(pts, 2, rng, 0.0, 50);
    RngStream again(2);
    const Matrix seeds = sample_distinct_rows(pts, 2, again);
    EXPECT_EQ(m.means, seeds);
    EXPECT_TRUE(m.fscl_converged);
    EXPECT_LE(m.fscl_epochs, 50u);
}

TEST(Fscl, KEqualsNIsStable)
{
    const Matrix pts = col({0, 10, 20, 30});
    RngStream rng(6);
    auto m = fscl_phase(pts, 4, rng, 0.01, 50);
    EXPECT_TRUE(m.fscl_converged);
    EXPECT_EQ(m.fscl_epochs, 2u);
}

TEST(Fscl, SeparatedPairsGetOneSeedEach)
{
    // Ends with one seed per pair exactly when the two initial seeds come from
    // different pairs. Two seeds started in the same pair reach a stable winner
    // split within a few epochs, long before one of them can cross the gap.
    const Matrix pts = col({0, 0.1, 9.9, 10});
    int ok = 0, split = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        RngStream peek(s, 5);
        const Matrix init = sample_distinct_rows(pts, 2, peek);
        const bool apart = (init(0, 0) < 5) != (init(1, 0) < 5);

        RngStream rng(s, 5);
        auto m = fscl_phase(pts, 2, rng, 0.05, 100);
        const double lo = std::min(m.means(0, 0), m.means(1, 0));
        const double hi = std::max(m.means(0, 0), m.means(1, 0));
        const bool good = lo >= 0 && lo <= 0.1 && hi >= 9.9 && hi <= 10;
        EXPECT_EQ(good, apart) << "seed " << s;
        EXPECT_TRUE(m.fscl_converged);
        ok += good;
        split += apart;
    }
    EXPECT_EQ(ok, split);
    EXPECT_EQ(ok, 34);
}

TEST(Fscl, BadArguments)
{
    RngStream rng(1);
    EXPECT_THROW(fscl_phase(col({1, 2}), 0, rng, 0.1, 5), ConfigError);
    EXPECT_THROW(fscl_phase(col({1, 2}), 1, rng, 1.0, 5), ConfigError);
    EXPECT_THROW(fscl_phase(col({1, 2}), 3, rng, 0.1, 5), ConfigError);
}

TEST(PenalizedCost, Examples)
{
    KStarModel m;
    m.k = 1;
    m.means = col({0});
    m.covariances = {col({4})};
    m.alphas = {0.5};
    const std::vector<double> x{2};
    // 0.5 * 4/4 + 0.5 * ln 4 + ln 2
    EXPECT_NEAR(penalized_cost(x, 0, m), 1.8862943611198908, 1e-12);

    m.alphas = {0.0};
    EXPECT_TRUE(std::isinf(penalized_cost(x, 0, m)));

    m.alphas = {0.5};
    m.covariances = {col({0})};
    try {
        penalized_cost(x, 0, m);
        FAIL() << "singular covariance accepted";
    } catch (const AlgorithmError& e) {
        EXPECT_NE(std::string(e.what()).find("cluster 0"), std::string::npos);
    }
}

TEST(PenalizedAssign, ReducesToNearestWithIdentity)
{
    RngStream rng(13);
    const auto data = gaussian_blobs({{0, 0}, {2, 2}, {4, 0}}, 1.0, 25, rng);
    KStarModel m;
    m.k = 3;
    m.means = matrix_from_rows({{0.1, 0.3}, {2.2, 1.7}, {3.6, -0.2}});
    m.covariances.assign(3, Matrix::Identity(2, 2));
    m.alphas.assign(3, 1.0 / 3.0);
    EXPECT_EQ(penalized_assign(data.values, m), assign_nearest(data.values, m.means));

    m.alphas = {1e-300, 0.5, 0.5};
    const auto a = penalized_assign(data.values, m);
    EXPECT_EQ(a.counts()[0], 0u);
}

TEST(Alphas, StayOnSimplex)
{
    RngStream rng(17);
    std::vector<double> alphas(6, 1.0 / 6.0);
    for (int step = 0; step < 20000; ++step) {
        const auto w = static_cast<std::size_t>(step % 7 == 0 ? rng.uniform_index(6) : rng.uniform_index(2));
        detail::reinforce_alphas(alphas, w, 0.05);
        double total = 0.0;
        for (double a : alphas) {
            EXPECT_GT(a, 0.0);
            total += a;
        }
        ASSERT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(Penalized, ZeroEtaFreezesMeans)
{
    const auto data = three_blobs(3);
    RngStream rng(3, 7);
    auto fscl = fscl_phase(data.values, 4, rng, 0.05, 100);
    const Matrix start = fscl.means;
    auto r = penalized_phase(data.values, fscl, rng, 0.0, 100);
    EXPECT_EQ(r.model.means, start);
    for (double a : r.model.alphas) EXPECT_DOUBLE_EQ(a, 0.25);
    ASSERT_TRUE(r.model.penalized_converged);
    EXPECT_EQ(r.assignment, penalized_assign(data.values, r.model));
}

TEST(Penalized, SingleSeedSitsNearGrandMean)
{
    const auto data = three_blobs(8);
    RngStream rng(8, 7);
    KStarOptions opt;
    opt.eta = 0.01;
    auto r = kstar_run(data.values, 1, rng, opt);
    EXPECT_DOUBLE_EQ(r.model.alphas[0], 1.0);
    EXPECT_EQ(r.assignment.index, std::vector<std::size_t>(data.n(), 0));
    EXPECT_EQ(r.surviving, 1u);
    const Eigen::RowVectorXd grand = data.values.colwise().mean();
    EXPECT_LE((r.model.means.row(0) - grand).norm(), 10 * 0.01 * diameter(data.values));
}

TEST(Penalized, CovariancesArePositiveDefinite)
{
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto data = three_blobs(s);
        RngStream rng(s, 7);
        auto r = kstar_run(data.values, 5, rng);
        double total = 0.0;
        for (double a : r.model.alphas) {
            EXPECT_GT(a, 0.0);
            total += a;
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
        for (const auto& cov : r.model.covariances) {
            EXPECT_LE((cov - cov.transpose()).cwiseAbs().maxCoeff(), 1e-10);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
            EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
        }
        EXPECT_LE(r.model.fscl_epochs, 100u);
        EXPECT_LE(r.model.penalized_epochs, 100u);
    }
}

TEST(Penalized, StarvesSurplusSeeds)
{
    int three = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto data = three_blobs(s);
        RngStream rng(s, 7);
        auto r = kstar_run(data.values, 5, rng);
        if (count_active(r, 0.05) == 3) ++three;
    }
    EXPECT_GE(three, 8);
}

TEST(KStar, Deterministic)
{
    const auto data = three_blobs(1);
    RngStream a(9, 7), b(9, 7);
    auto ra = kstar_run(data.values, 5, a);
    auto rb = kstar_run(data.values, 5, b);
    EXPECT_EQ(ra.model.means, rb.model.means);
    EXPECT_EQ(ra.model.alphas, rb.model.alphas);
    EXPECT_EQ(ra.assignment, rb.assignment);
}

TEST(KStar, SingleSeedSurvives)
{
    const Matrix pts = matrix_from_rows({{0, 0}, {1, 0}, {0, 1}, {5, 5}});
    RngStream rng(4);
    EXPECT_EQ(kstar_run(pts, 1, rng).surviving, 1u);
}
