#include <gtest/gtest.h>

#include "clab/em.hpp"
#include "clab/kmeans.hpp"
#include "clab/synthetic.hpp"

using namespace clab;

namespace {

Matrix col(std::vector<double> v)
{
    Matrix m(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
    return m;
}

}  // namespace

TEST(EStep, Examples)
{
    const Matrix r = e_step(col({5}), col({0, 10}), 1.0);
    EXPECT_DOUBLE_EQ(r(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(r(0, 1), 0.5);

    const Matrix far = e_step(col({0}), col({0, 100}), 0.01);
    EXPECT_NEAR(far(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(far(0, 1), 0.0, 1e-12);

    const Matrix one = e_step(col({1, 2, 3}), col({7}), 2.0);
    EXPECT_TRUE((one.array() == 1.0).all());

    EXPECT_THROW(e_step(col({1}), col({1}), 0.0), AlgorithmError);
}

TEST(EStep, RowsNormalizedEvenWhenExponentsUnderflow)
{
    RngStream rng(5);
    const auto data = gaussian_blobs({{0, 0}, {50, 0}}, 3.0, 30, rng);
    for (double s2 : {1e-6, 0.01, 1.0, 100.0}) {
        const Matrix r = e_step(data.values, matrix_from_rows({{0, 0}, {50, 0}, {25, 25}}), s2);
        for (Eigen::Index i = 0; i < r.rows(); ++i) {
            EXPECT_NEAR(r.row(i).sum(), 1.0, 1e-12);
            EXPECT_GE(r.row(i).minCoeff(), 0.0);
        }
    }
}

TEST(MStep, Examples)
{
    const Matrix pts = matrix_from_rows({{0, 0}, {2, 0}, {4, 6}});
    const Matrix uniform = Matrix::Constant(3, 2, 0.5);
    const Matrix m = m_step(pts, uniform);
    EXPECT_NEAR(m(0, 0), 2.0, 1e-12);
    EXPECT_NEAR(m(1, 1), 2.0, 1e-12);

    Matrix hard = Matrix::Zero(3, 2);
    hard(0, 0) = hard(1, 0) = hard(2, 1) = 1.0;
    Assignment a{2, {0, 0, 1}};
    EXPECT_EQ(m_step(pts, hard), recompute_centroids(pts, a));

    const Matrix ones = Matrix::Ones(3, 1);
    EXPECT_EQ(m_step(pts, ones, MStepVariant::paper_literal), m_step(pts, ones, MStepVariant::standard));
}

TEST(MStep, StarvedComponentKeepsPreviousMean)
{
    const Matrix pts = col({1, 2});
    Matrix resp(2, 2);
    resp << 1, 0, 1, 0;
    const Matrix prev = col({0, 42});
    const Matrix m = m_step(pts, resp, MStepVariant::standard, prev);
    EXPECT_DOUBLE_EQ(m(0, 0), 1.5);
    EXPECT_DOUBLE_EQ(m(1, 0), 42.0);
}

TEST(MStep, VariantsDisagreeUnlessColumnsSumToN)
{
    // Non-uniform responsibilities: the literal (1/n) update shrinks toward 0.
    const Matrix pts = col({0, 1, 9, 10});
    Matrix resp(4, 2);
    resp << 0.9, 0.1, 0.8, 0.2, 0.3, 0.7, 0.1, 0.9;
    const Matrix s = m_step(pts, resp, MStepVariant::standard);
    const Matrix p = m_step(pts, resp, MStepVariant::paper_literal);
    EXPECT_GT((s - p).cwiseAbs().maxCoeff(), 1e-6);

    // k = 1: the single column sums to n and the two updates coincide.
    const Matrix ones = Matrix::Ones(4, 1);
    EXPECT_EQ(m_step(pts, ones, MStepVariant::standard), m_step(pts, ones, MStepVariant::paper_literal));
}

TEST(EmRun, TwoClusterFixedPoint)
{
    const Matrix pts = col({0, 0.1, 9.9, 10});
    for (auto init : {std::pair{0.0, 9.9}, std::pair{0.1, 10.0}, std::pair{0.0, 10.0}, std::pair{0.1, 9.9}}) {
        const auto m = em_from(pts, col({init.first, init.second}), 0.25, MStepVariant::standard, 300, 1e-12);
        EXPECT_NEAR(m.means(0, 0), 0.05, 1e-6);
        EXPECT_NEAR(m.means(1, 0), 9.95, 1e-6);
    }
}

TEST(EmRun, SingleComponentAndTermination)
{
    const Matrix pts = col({1, 2, 6});
    RngStream rng(1);
    EmOptions opt;
    opt.sigma2_mode = Sigma2Mode::fixed;
    auto one = em_run(pts, 1, rng, opt);
    EXPECT_NEAR(one.means(0, 0), 3.0, 1e-12);
    EXPECT_LE(one.iterations, 2u);

    opt.tol = std::numeric_limits<double>::infinity();
    auto quick = em_run(pts, 2, rng, opt);
    EXPECT_EQ(quick.iterations, 1u);
    EXPECT_EQ(quick.loglik_trace.size(), 1u);

    EXPECT_THROW(em_run(pts, 4, rng, opt), ConfigError);
}

TEST(EmRun, DataVarianceMode)
{
    const Matrix pts = matrix_from_rows({{0, 0}, {1, 2}, {2, 4}});
    // per-column population variances 2/3 and 8/3
    EXPECT_NEAR(mean_column_variance(pts), 5.0 / 3.0, 1e-12);
    EXPECT_THROW(resolve_sigma2(matrix_from_rows({{1, 1}, {1, 1}}), EmOptions{}), AlgorithmError);
}

TEST(EmRun, LogLikelihoodMonotone)
{
    for (std::uint64_t s = 0; s < 15; ++s) {
        RngStream data_rng(900 + s);
        const auto data = gaussian_blobs({{0, 0}, {2, 1}, {1, 3}}, 0.7, 30, data_rng);
        RngStream rng(s, 3);
        EmOptions opt;
        opt.sigma2_mode = Sigma2Mode::fixed;
        opt.sigma2 = 0.5;
        auto m = em_run(data.values, 4, rng, opt);
        for (std::size_t t = 1; t < m.loglik_trace.size(); ++t)
            EXPECT_GE(m.loglik_trace[t], m.loglik_trace[t - 1] - 1e-9);
    }
}

TEST(EmRun, TinyVarianceIsHardAssignment)
{
    RngStream data_rng(4);
    const auto data = gaussian_blobs({{0, 0}, {3, 0}, {0, 3}}, 1.0, 20, data_rng);
    const Matrix means = matrix_from_rows({{0.2, 0.1}, {2.5, 0.4}, {0.3, 2.2}});
    const Matrix r = e_step(data.values, means, 1e-12);
    EXPECT_EQ(hard_assign(r), assign_nearest(data.values, means));
}

TEST(HardAssign, Examples)
{
    Matrix r(3, 2);
    r << 0.5, 0.5, 0.1, 0.9, 0.7, 0.3;
    EXPECT_EQ(hard_assign(r).index, (std::vector<std::size_t>{0, 1, 0}));
    EXPECT_EQ(hard_assign(Matrix::Ones(4, 1)).index, (std::vector<std::size_t>(4, 0)));
}
