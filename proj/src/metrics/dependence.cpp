#include "dimafx/metrics/dependence.hpp"

#include "dimafx/numerics/kernels.hpp"

namespace dimafx::metrics {

double orthogonal_score(const Eigen::Ref<const RowVector>& x, const Eigen::Ref<const RowVector>& y)
{
    if (x.size() != y.size())
        throw NumericalError("orthogonal_score: length mismatch");
    const double nx = x.norm();
    const double ny = y.norm();
    if (nx == 0.0 || ny == 0.0)
        throw NumericalError("orthogonal_score: zero vector");
    return std::min(1.0, std::abs(x.dot(y)) / (nx * ny));
}

DisentanglementReport disentanglement_report(const Matrix& z_gg, const Matrix& z_hh,
                                             const Matrix& z_hg, const Matrix& z_gh)
{
    const Index n = z_gg.rows();
    if (n < 2)
        throw NumericalError("disentanglement_report: need at least 2 samples");
    if (z_hh.rows() != n || z_hg.rows() != n || z_gh.rows() != n)
        throw NumericalError("disentanglement_report: stacks have different sample counts");
    const Matrix specific = hconcat({z_gg, z_hh});
    const Matrix shared = hconcat({z_hg, z_gh});

    DisentanglementReport r;
    const auto d1 = distance_correlation(z_gg, z_hh);
    const auto d2 = distance_correlation(specific, shared);
    r.d1 = d1.value;
    r.d2 = d2.value;
    r.total = 0.5 * (r.d1 + r.d2);
    r.degenerate = d1.degenerate || d2.degenerate;

    double o1 = 0.0;
    double o2 = 0.0;
    for (Index i = 0; i < n; ++i) {
        o1 += orthogonal_score(z_gg.row(i), z_hh.row(i));
        o2 += orthogonal_score(specific.row(i), shared.row(i));
    }
    r.orth_d1 = o1 / static_cast<double>(n);
    r.orth_d2 = o2 / static_cast<double>(n);
    r.orth_total = 0.5 * (r.orth_d1 + r.orth_d2);
    return r;
}

} // namespace dimafx::metrics
