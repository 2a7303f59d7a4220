#pragma once

#include <cstdint>
#include <vector>

#include "dimafx/numerics/tensor.hpp"

namespace dimafx::prototyping {

inline constexpr Index kDefaultComponents = 16;
inline constexpr double kDefaultVarianceFloor = 1e-4;

struct KMeansResult {
    Matrix centroids;               // k x dim
    std::vector<Index> assignment;  // per point
    std::vector<double> wcss_trace; // within-cluster sum of squares after each iteration
};

/// Lloyd's algorithm with k-means++ seeding; empty clusters are reseeded to the
/// point farthest from its current centroid.
KMeansResult kmeans(const Matrix& points, Index k, std::uint64_t seed, int max_iters = 100);

/// Diagonal-covariance Gaussian mixture summarizing one slide.
struct PrototypeModel {
    Matrix means;     // components x dim
    Matrix variances; // components x dim, each >= the variance floor in use
    Vector weights;   // components, sums to 1

    Index components() const { return means.rows(); }
    Index dim() const { return means.cols(); }
    void validate() const;
};

/// Means from `centroids`, identity covariances, weights 1/components.
PrototypeModel uniform_init(const Matrix& centroids);

struct EmOptions {
    int iterations = 30;
    double relative_tolerance = 1e-6; // stop when |dLL| <= tol * |LL|; 0 disables
    double variance_floor = kDefaultVarianceFloor;
};

struct EmResult {
    PrototypeModel model;
    std::vector<double> log_likelihood; // before the first iteration, then after each
};

/// Standard EM. Components whose responsibility mass vanishes keep their mean
/// and variance with weight 0.
EmResult fit_gmm_em(const Matrix& points, const PrototypeModel& init, const EmOptions& options = {});

double log_likelihood(const PrototypeModel& model, const Matrix& points);

/// Posterior component probabilities, computed in log space (points x components).
Matrix responsibilities(const PrototypeModel& model, const Matrix& points);

struct Prototype {
    RowVector mean;
    double cardinality;
};

std::vector<Prototype> prototype_summary(const PrototypeModel& model);

/// The per-slide model input: prototype means and cardinalities.
struct PrototypeFeatures {
    Matrix means;       // components x dim
    Vector cardinality; // components
};

PrototypeFeatures prototype_features(const PrototypeModel& model);

/// Per component, the m patches with the highest responsibility (descending, lower index on ties).
std::vector<std::vector<Index>> top_assignments(const PrototypeModel& model, const Matrix& points,
                                                Index m);

} // namespace dimafx::prototyping
