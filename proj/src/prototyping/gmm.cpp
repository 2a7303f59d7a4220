#include "dimafx/prototyping/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "dimafx/numerics/rng.hpp"

namespace dimafx::prototyping {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Squared distance from every point to every centroid (points x k).
Matrix squared_distances(const Matrix& points, const Matrix& centroids)
{
    const Vector p2 = points.rowwise().squaredNorm();
    const RowVector c2 = centroids.rowwise().squaredNorm().transpose();
    Matrix d = -2.0 * points * centroids.transpose();
    d.colwise() += p2;
    d.rowwise() += c2;
    return d.cwiseMax(0.0);
}

double nearest(const Matrix& dist, Index i, Index& best)
{
    best = 0;
    double bd = dist(i, 0);
    for (Index c = 1; c < dist.cols(); ++c) {
        if (dist(i, c) < bd) {
            bd = dist(i, c);
            best = c;
        }
    }
    return bd;
}

Matrix seed_plus_plus(const Matrix& points, Index k, Rng& rng)
{
    const Index n = points.rows();
    Matrix centroids(k, points.cols());
    centroids.row(0) = points.row(static_cast<Index>(rng.index(static_cast<std::size_t>(n))));
    Vector d2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    for (Index c = 1; c < k; ++c) {
        const double total = d2.sum();
        Index pick = 0;
        if (total > 0.0) {
            double u = rng.uniform() * total;
            pick = n - 1;
            for (Index i = 0; i < n; ++i) {
                if (d2(i) <= 0.0)
                    continue;
                if (u < d2(i)) {
                    pick = i;
                    break;
                }
                u -= d2(i);
            }
            while (d2(pick) <= 0.0 && pick > 0)
                --pick;
        } else {
            pick = static_cast<Index>(rng.index(static_cast<std::size_t>(n)));
        }
        centroids.row(c) = points.row(pick);
        d2 = d2.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
    }
    return centroids;
}

/// log N(x | mean, diag var) + log weight, points x components.
Matrix weighted_log_density(const PrototypeModel& model, const Matrix& points)
{
    const Index n = points.rows();
    const Index k = model.components();
    Matrix out(n, k);
    const double log2pi = std::log(2.0 * std::numbers::pi);
    for (Index c = 0; c < k; ++c) {
        const RowVector inv = model.variances.row(c).cwiseInverse();
        const double log_det = model.variances.row(c).array().log().sum();
        const double log_w = model.weights(c) > 0.0 ? std::log(model.weights(c)) : kNegInf;
        const Vector quad =
            ((points.rowwise() - model.means.row(c)).array().square().rowwise() * inv.array())
                .rowwise()
                .sum();
        out.col(c) = (-0.5 * (quad.array() + log_det + static_cast<double>(model.dim()) * log2pi) +
                      log_w)
                         .matrix();
    }
    return out;
}

/// Row-wise log-sum-exp; writes normalized probabilities into `post` when non-null.
double normalize_rows(const Matrix& logp, Matrix* post)
{
    double total = 0.0;
    if (post)
        post->resize(logp.rows(), logp.cols());
    for (Index i = 0; i < logp.rows(); ++i) {
        const double m = logp.row(i).maxCoeff();
        if (!std::isfinite(m))
            throw NumericalError("GMM: point has zero density under every component");
        const auto e = (logp.row(i).array() - m).exp();
        const double s = e.sum();
        total += m + std::log(s);
        if (post)
            post->row(i) = e / s;
    }
    return total;
}

} // namespace

KMeansResult kmeans(const Matrix& points, Index k, std::uint64_t seed, int max_iters)
{
    if (k < 1)
        throw ConfigError("kmeans: k must be >= 1");
    if (points.rows() < k)
        throw DataError("kmeans: " + std::to_string(points.rows()) + " points for k=" +
                        std::to_string(k));
    Rng rng(seed);
    const Index n = points.rows();
    KMeansResult r;
    r.centroids = seed_plus_plus(points, k, rng);
    r.assignment.assign(static_cast<std::size_t>(n), -1);

    for (int it = 0; it < max_iters; ++it) {
        const Matrix dist = squared_distances(points, r.centroids);
        bool changed = false;
        for (Index i = 0; i < n; ++i) {
            Index best = 0;
            nearest(dist, i, best);
            if (r.assignment[static_cast<std::size_t>(i)] != best) {
                r.assignment[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        if (!changed && it > 0)
            break;

        Matrix sums = Matrix::Zero(k, points.cols());
        std::vector<Index> counts(static_cast<std::size_t>(k), 0);
        for (Index i = 0; i < n; ++i) {
            const Index c = r.assignment[static_cast<std::size_t>(i)];
            sums.row(c) += points.row(i);
            ++counts[static_cast<std::size_t>(c)];
        }
        for (Index c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0)
                r.centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        }
        for (Index c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0)
                continue;
            // Reseed to the point with the largest distance to its own centroid.
            Index far = 0;
            double far_d = -1.0;
            for (Index i = 0; i < n; ++i) {
                const Index own = r.assignment[static_cast<std::size_t>(i)];
                if (counts[static_cast<std::size_t>(own)] <= 1)
                    continue;
                const double d = (points.row(i) - r.centroids.row(own)).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far_d < 0.0)
                continue;
            --counts[static_cast<std::size_t>(r.assignment[static_cast<std::size_t>(far)])];
            r.assignment[static_cast<std::size_t>(far)] = c;
            counts[static_cast<std::size_t>(c)] = 1;
            r.centroids.row(c) = points.row(far);
        }

        const Matrix after = squared_distances(points, r.centroids);
        double wcss = 0.0;
        for (Index i = 0; i < n; ++i) {
            Index best = 0;
            wcss += nearest(after, i, best);
        }
        r.wcss_trace.push_back(wcss);
    }
    // Final assignment consistent with the returned centroids.
    const Matrix dist = squared_distances(points, r.centroids);
    for (Index i = 0; i < n; ++i)
        nearest(dist, i, r.assignment[static_cast<std::size_t>(i)]);
    return r;
}

void PrototypeModel::validate() const
{
    if (means.rows() == 0 || means.cols() == 0)
        throw DataError("PrototypeModel: empty");
    if (variances.rows() != means.rows() || variances.cols() != means.cols() ||
        weights.size() != means.rows())
        throw DataError("PrototypeModel: inconsistent shapes");
    if ((variances.array() <= 0.0).any())
        throw DataError("PrototypeModel: non-positive variance");
    if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-9)
        throw DataError("PrototypeModel: weights are not a probability vector");
}

PrototypeModel uniform_init(const Matrix& centroids)
{
    PrototypeModel m;
    m.means = centroids;
    m.variances = Matrix::Ones(centroids.rows(), centroids.cols());
    m.weights = Vector::Constant(centroids.rows(), 1.0 / static_cast<double>(centroids.rows()));
    return m;
}

double log_likelihood(const PrototypeModel& model, const Matrix& points)
{
    return normalize_rows(weighted_log_density(model, points), nullptr);
}

Matrix responsibilities(const PrototypeModel& model, const Matrix& points)
{
    if (points.cols() != model.dim())
        throw DataError("responsibilities: dimension mismatch");
    Matrix post;
    normalize_rows(weighted_log_density(model, points), &post);
    return post;
}

EmResult fit_gmm_em(const Matrix& points, const PrototypeModel& init, const EmOptions& options)
{
    if (points.rows() < 1)
        throw DataError("fit_gmm_em: no points");
    if (points.cols() != init.dim())
        throw DataError("fit_gmm_em: dimension mismatch");
    init.validate();

    EmResult res;
    res.model = init;
    PrototypeModel& m = res.model;
    const double n = static_cast<double>(points.rows());
    Matrix post;
    res.log_likelihood.push_back(normalize_rows(weighted_log_density(m, points), &post));

    for (int it = 0; it < options.iterations; ++it) {
        const Vector mass = post.colwise().sum().transpose();
        for (Index c = 0; c < m.components(); ++c) {
            m.weights(c) = mass(c) / n;
            if (mass(c) <= 0.0)
                continue;
            const RowVector mean = (post.col(c).transpose() * points) / mass(c);
            RowVector var =
                (post.col(c).transpose() * (points.rowwise() - mean).array().square().matrix()) /
                mass(c);
            if (options.variance_floor <= 0.0 && (var.array() <= 0.0).any())
                throw NumericalError("fit_gmm_em: zero variance with the variance floor disabled");
            m.means.row(c) = mean;
            m.variances.row(c) = var.cwiseMax(options.variance_floor);
        }
        m.weights /= m.weights.sum();

        const double ll = normalize_rows(weighted_log_density(m, points), &post);
        const double prev = res.log_likelihood.back();
        res.log_likelihood.push_back(ll);
        if (options.relative_tolerance > 0.0 &&
            std::abs(ll - prev) <= options.relative_tolerance * std::abs(ll))
            break;
    }
    return res;
}

std::vector<Prototype> prototype_summary(const PrototypeModel& model)
{
    std::vector<Prototype> out;
    out.reserve(static_cast<std::size_t>(model.components()));
    for (Index c = 0; c < model.components(); ++c)
        out.push_back(Prototype{model.means.row(c), model.weights(c)});
    return out;
}

PrototypeFeatures prototype_features(const PrototypeModel& model)
{
    return PrototypeFeatures{model.means, model.weights};
}

std::vector<std::vector<Index>> top_assignments(const PrototypeModel& model, const Matrix& points,
                                                Index m)
{
    if (m < 1)
        throw ConfigError("top_assignments: m must be >= 1");
    if (m > points.rows())
        throw DataError("top_assignments: m=" + std::to_string(m) + " exceeds patch count " +
                        std::to_string(points.rows()));
    const Matrix post = responsibilities(model, points);
    std::vector<std::vector<Index>> out;
    for (Index c = 0; c < model.components(); ++c) {
        std::vector<Index> idx(static_cast<std::size_t>(points.rows()));
        std::iota(idx.begin(), idx.end(), Index{0});
        std::partial_sort(idx.begin(), idx.begin() + m, idx.end(), [&](Index a, Index b) {
            return post(a, c) > post(b, c) || (post(a, c) == post(b, c) && a < b);
        });
        idx.resize(static_cast<std::size_t>(m));
        out.push_back(std::move(idx));
    }
    return out;
}

} // namespace dimafx::prototyping
