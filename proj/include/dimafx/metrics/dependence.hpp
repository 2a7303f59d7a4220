#pragma once

#include <cmath>

#include "dimafx/numerics/tensor.hpp"

namespace dimafx::metrics {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Euclidean distances between the rows of x.
template <typename Derived>
MatrixX<typename Derived::Scalar> pairwise_distances(const Eigen::MatrixBase<Derived>& x)
{
    using Scalar = typename Derived::Scalar;
    const Index n = x.rows();
    MatrixX<Scalar> d = MatrixX<Scalar>::Zero(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index k = j + 1; k < n; ++k)
            d(j, k) = d(k, j) = (x.row(j) - x.row(k)).norm();
    return d;
}

/// a - row means - column means + grand mean.
template <typename Derived>
MatrixX<typename Derived::Scalar> double_centered(const Eigen::MatrixBase<Derived>& a)
{
    using Scalar = typename Derived::Scalar;
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> row_means = a.rowwise().mean();
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> col_means = a.colwise().mean();
    MatrixX<Scalar> out = a;
    out.colwise() -= row_means;
    out.rowwise() -= col_means;
    out.array() += a.mean();
    return out;
}

template <typename Scalar>
struct DcResult {
    Scalar value = 0;
    bool degenerate = false; // a stack with zero distance variance; value is 0
};

/**
 * Distance correlation dCov(X,Y) / sqrt(dVar(X) dVar(Y)) with the biased
 * (1/n^2) estimator: dCov^2 = mean(A o B) over double-centered distance
 * matrices. Rows are samples; x and y may have different widths.
 */
template <typename DX, typename DY>
DcResult<typename DX::Scalar> distance_correlation(const Eigen::MatrixBase<DX>& x,
                                                   const Eigen::MatrixBase<DY>& y)
{
    using Scalar = typename DX::Scalar;
    if (x.rows() != y.rows())
        throw NumericalError("distance_correlation: row counts differ");
    if (x.rows() < 2)
        throw NumericalError("distance_correlation: need at least 2 rows");
    const MatrixX<Scalar> a = double_centered(pairwise_distances(x));
    const MatrixX<Scalar> b = double_centered(pairwise_distances(y));
    const Scalar dcov2 = a.cwiseProduct(b).mean();
    const Scalar vx = a.cwiseProduct(a).mean();
    const Scalar vy = b.cwiseProduct(b).mean();
    using std::sqrt;
    if (!(vx > Scalar(0)) || !(vy > Scalar(0)))
        return {Scalar(0), true};
    const Scalar num = dcov2 > Scalar(0) ? sqrt(dcov2) : Scalar(0);
    return {num / sqrt(sqrt(vx * vy)), false};
}

/// |x . y| / (|x| |y|); throws on a zero vector.
double orthogonal_score(const Eigen::Ref<const RowVector>& x, const Eigen::Ref<const RowVector>& y);

/**
 * D1 = DC(Z_gg, Z_hh), D2 = DC([Z_gg, Z_hh], [Z_hg, Z_gh]), total = mean.
 * The orthogonal variant averages per-sample |cos| over the same pairings.
 */
struct DisentanglementReport {
    double d1 = 0.0;
    double d2 = 0.0;
    double total = 0.0;
    double orth_d1 = 0.0;
    double orth_d2 = 0.0;
    double orth_total = 0.0;
    bool degenerate = false;
};

/// Stacks are samples x d_z pooled representations.
DisentanglementReport disentanglement_report(const Matrix& z_gg, const Matrix& z_hh,
                                             const Matrix& z_hg, const Matrix& z_gh);

} // namespace dimafx::metrics
