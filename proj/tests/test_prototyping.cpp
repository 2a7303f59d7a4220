#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <numeric>

#include "dimafx/data/synthetic.hpp"
#include "dimafx/prototyping/gmm.hpp"
#include "dimafx/prototyping/slides.hpp"
#include "fixtures.hpp"

using namespace dimafx;
using namespace dimafx::prototyping;
using fixture::random_matrix;

namespace {

/// Two Gaussian blobs at -10 and +10 (all dimensions) with unit noise.
Matrix blobs(Rng& rng, Index per_blob, Index dim)
{
    Matrix p(2 * per_blob, dim);
    for (Index i = 0; i < p.rows(); ++i)
        for (Index d = 0; d < dim; ++d)
            p(i, d) = (i < per_blob ? -10.0 : 10.0) + rng.normal();
    return p;
}

PrototypeModel random_model(Rng& rng, Index k, Index dim)
{
    PrototypeModel m;
    m.means = random_matrix(rng, k, dim, 2.0);
    m.variances = Matrix(k, dim);
    for (Index i = 0; i < m.variances.size(); ++i)
        m.variances(i) = rng.uniform(0.3, 2.0);
    m.weights = Vector(k);
    for (Index c = 0; c < k; ++c)
        m.weights(c) = rng.uniform(0.2, 1.0);
    m.weights /= m.weights.sum();
    return m;
}

} // namespace

TEST(KMeans, SingleClusterIsTheMean)
{
    Rng rng(1);
    const Matrix p = random_matrix(rng, 50, 3);
    const auto r = kmeans(p, 1, 9);
    EXPECT_LT((r.centroids.row(0) - p.colwise().mean()).norm(), 1e-12);
}

TEST(KMeans, RecoversSeparatedBlobs)
{
    Rng rng(2);
    const Matrix p = blobs(rng, 100, 4);
    const auto r = kmeans(p, 2, 3);
    const RowVector lo = p.topRows(100).colwise().mean();
    const RowVector hi = p.bottomRows(100).colwise().mean();
    const bool order = r.centroids(0, 0) < 0;
    EXPECT_LT((r.centroids.row(order ? 0 : 1) - lo).norm(), 0.1);
    EXPECT_LT((r.centroids.row(order ? 1 : 0) - hi).norm(), 0.1);
}

TEST(KMeans, EveryPointItsOwnCluster)
{
    Rng rng(3);
    const Matrix p = random_matrix(rng, 12, 2);
    const auto r = kmeans(p, 12, 4);
    ASSERT_FALSE(r.wcss_trace.empty());
    EXPECT_NEAR(r.wcss_trace.back(), 0.0, 1e-12);
    for (Index i = 0; i < 12; ++i)
        EXPECT_LT((r.centroids.row(r.assignment[static_cast<std::size_t>(i)]) - p.row(i)).norm(), 1e-12);
}

TEST(KMeans, WcssNonIncreasingAndDeterministic)
{
    for (std::uint64_t s = 0; s < 10; ++s) {
        Rng rng(s);
        const Matrix p = random_matrix(rng, 200, 3);
        const auto r = kmeans(p, 6, s);
        for (std::size_t i = 1; i < r.wcss_trace.size(); ++i)
            EXPECT_LE(r.wcss_trace[i], r.wcss_trace[i - 1] + 1e-9);
        EXPECT_EQ(kmeans(p, 6, s).centroids, r.centroids);
    }
}

TEST(KMeans, TooFewPoints)
{
    EXPECT_THROW(kmeans(Matrix::Zero(2, 2), 3, 1), DataError);
}

TEST(Em, SingleComponentClosedForm)
{
    Rng rng(4);
    const Matrix p = random_matrix(rng, 40, 3);
    PrototypeModel init = uniform_init(Matrix::Zero(1, 3));
    const auto r = fit_gmm_em(p, init, {5, 0.0, 1e-4});
    const RowVector mean = p.colwise().mean();
    const RowVector var = (p.rowwise() - mean).array().square().colwise().mean();
    EXPECT_LT((r.model.means.row(0) - mean).norm(), 1e-12);
    EXPECT_LT((r.model.variances.row(0) - var.cwiseMax(1e-4)).norm(), 1e-12);
    EXPECT_NEAR(r.model.weights(0), 1.0, 1e-15);
}

TEST(Em, ZeroIterationsReturnsInit)
{
    Rng rng(5);
    const PrototypeModel m = random_model(rng, 3, 2);
    const Matrix p = random_matrix(rng, 30, 2);
    const auto r = fit_gmm_em(p, m, {0, 1e-6, 1e-4});
    EXPECT_EQ(r.model.means, m.means);
    EXPECT_EQ(r.model.variances, m.variances);
    EXPECT_EQ(r.model.weights, m.weights);
}

TEST(Em, TwoBlobWeights)
{
    Rng rng(6);
    const Matrix p = blobs(rng, 100, 3);
    Matrix init(2, 3);
    init.row(0) = p.row(0);
    init.row(1) = p.row(150);
    const auto r = fit_gmm_em(p, uniform_init(init));
    EXPECT_NEAR(r.model.weights(0), 0.5, 0.05);
    EXPECT_NEAR(r.model.weights(1), 0.5, 0.05);
    const auto summary = prototype_summary(r.model);
    EXPECT_NEAR(summary[0].cardinality + summary[1].cardinality, 1.0, 1e-12);
}

TEST(Em, LogLikelihoodNeverDecreases)
{
    for (std::uint64_t s = 0; s < 20; ++s) {
        Rng rng(100 + s);
        const Matrix p = random_matrix(rng, 80, 4, 1.5);
        const Matrix centroids = kmeans(p, 5, s).centroids;
        const auto r = fit_gmm_em(p, uniform_init(centroids), {40, 0.0, 1e-4});
        for (std::size_t i = 1; i < r.log_likelihood.size(); ++i)
            EXPECT_GE(r.log_likelihood[i], r.log_likelihood[i - 1] - 1e-8) << "seed " << s << " iter " << i;
    }
}

TEST(Em, WeightsAreMeanResponsibilities)
{
    Rng rng(7);
    const Matrix p = random_matrix(rng, 60, 3);
    const PrototypeModel init = uniform_init(kmeans(p, 4, 1).centroids);
    const auto before = fit_gmm_em(p, init, {9, 0.0, 1e-4});
    const auto after = fit_gmm_em(p, init, {10, 0.0, 1e-4});
    const Vector mean_resp = responsibilities(before.model, p).colwise().mean().transpose();
    EXPECT_LT((after.model.weights - mean_resp).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Em, IdenticalPointsNeedTheFloor)
{
    const Matrix p = Matrix::Ones(10, 2);
    const PrototypeModel init = uniform_init(Matrix::Zero(1, 2));
    EXPECT_THROW(fit_gmm_em(p, init, {3, 0.0, 0.0}), NumericalError);
    const auto r = fit_gmm_em(p, init, {3, 0.0, 1e-4});
    EXPECT_TRUE(all_finite(responsibilities(r.model, p)));
    EXPECT_EQ(r.model.variances.minCoeff(), 1e-4);
}

TEST(Responsibilities, SymmetricPointSplitsEvenly)
{
    PrototypeModel m = uniform_init((Matrix(2, 2) << -1, 0, 1, 0).finished());
    const Matrix r = responsibilities(m, (Matrix(1, 2) << 0, 3).finished());
    EXPECT_NEAR(r(0, 0), 0.5, 1e-15);
}

TEST(Responsibilities, TinyVarianceClaimsItsMean)
{
    PrototypeModel m = uniform_init((Matrix(2, 2) << 0, 0, 0.5, 0.5).finished());
    m.variances.row(0).setConstant(1e-6);
    const Matrix r = responsibilities(m, (Matrix(1, 2) << 0, 0).finished());
    EXPECT_GT(r(0, 0), 0.999);
}

TEST(Responsibilities, MatchDirectDensityRatio)
{
    Rng rng(8);
    const PrototypeModel m = random_model(rng, 3, 4);
    const Matrix p = random_matrix(rng, 10, 4, 2.0);
    const Matrix r = responsibilities(m, p);
    for (Index i = 0; i < p.rows(); ++i) {
        std::vector<long double> dens(3);
        long double total = 0;
        for (Index c = 0; c < 3; ++c) {
            long double d = m.weights(c);
            for (Index k = 0; k < 4; ++k) {
                const long double v = m.variances(c, k);
                const long double z = static_cast<long double>(p(i, k)) - m.means(c, k);
                d *= std::exp(-z * z / (2 * v)) / std::sqrt(2 * std::numbers::pi_v<long double> * v);
            }
            dens[static_cast<std::size_t>(c)] = d;
            total += d;
        }
        EXPECT_NEAR(r.row(i).sum(), 1.0, 1e-12);
        for (Index c = 0; c < 3; ++c)
            EXPECT_NEAR(r(i, c), static_cast<double>(dens[static_cast<std::size_t>(c)] / total), 1e-10);
    }
}

TEST(PrototypeSummary, UniformInitAndDefaultCount)
{
    Rng rng(9);
    const Matrix centroids = random_matrix(rng, kDefaultComponents, 3);
    const Matrix p = random_matrix(rng, 40, 3);
    const auto r = fit_gmm_em(p, uniform_init(centroids), {0, 0.0, 1e-4});
    const auto s = prototype_summary(r.model);
    ASSERT_EQ(s.size(), 16U);
    for (const auto& proto : s)
        EXPECT_DOUBLE_EQ(proto.cardinality, 1.0 / 16.0);
}

TEST(TopAssignments, FullRankIsPermutation)
{
    Rng rng(10);
    const PrototypeModel m = random_model(rng, 3, 2);
    const Matrix p = random_matrix(rng, 15, 2);
    for (const auto& list : top_assignments(m, p, 15)) {
        std::vector<Index> sorted = list;
        std::sort(sorted.begin(), sorted.end());
        for (Index i = 0; i < 15; ++i)
            EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
    }
    EXPECT_THROW(top_assignments(m, p, 16), DataError);
}

TEST(TopAssignments, MatchesSortOracle)
{
    Rng rng(11);
    const PrototypeModel m = random_model(rng, 4, 3);
    Matrix p = random_matrix(rng, 30, 3, 2.0);
    p.row(17) = m.means.row(2);
    const Matrix resp = responsibilities(m, p);
    const auto top = top_assignments(m, p, 3);
    for (Index c = 0; c < 4; ++c) {
        std::vector<std::pair<double, Index>> col;
        for (Index i = 0; i < 30; ++i)
            col.push_back({-resp(i, c), i});
        std::sort(col.begin(), col.end());
        for (std::size_t r = 0; r < 3; ++r)
            EXPECT_EQ(top[static_cast<std::size_t>(c)][r], col[r].second);
    }
}

TEST(Slides, PoolingCapsAndIsDeterministic)
{
    data::SyntheticConfig c;
    c.samples = 20;
    c.min_patches = 10;
    c.max_patches = 12;
    c.genes = 30;
    c.pathways = 3;
    c.min_pathway_genes = 2;
    c.max_pathway_genes = 4;
    c.sites = 4;
    const auto syn = data::generate_cohort(c, 1);
    std::vector<std::size_t> all(20);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const Matrix capped = pool_patches(syn.cohort, all, 50, 3);
    EXPECT_EQ(capped.rows(), 50);
    EXPECT_EQ(capped, pool_patches(syn.cohort, all, 50, 3));
    const Matrix full = pool_patches(syn.cohort, {0, 1}, 1000, 3);
    EXPECT_EQ(full.rows(), syn.cohort.samples[0].patch_features.rows() + syn.cohort.samples[1].patch_features.rows());

    SlideOptions opts;
    opts.components = 4;
    const Matrix centroids = global_centroids(syn.cohort, all, opts, 5);
    const auto models = fit_slides(syn.cohort, centroids, opts);
    ASSERT_EQ(models.size(), 20U);
    for (const auto& m : models)
        m.validate();
}
