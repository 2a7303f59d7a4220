#include "dimafx/numerics/kernels.hpp"

namespace dimafx {

Vector softmax(const Eigen::Ref<const Vector>& v)
{
    if (v.size() == 0)
        throw NumericalError("softmax: empty input");
    const Vector e = (v.array() - v.maxCoeff()).exp();
    return e / e.sum();
}

Matrix softmax_rows(const Matrix& x)
{
    Matrix out(x.rows(), x.cols());
    for (Index i = 0; i < x.rows(); ++i) {
        const auto e = (x.row(i).array() - x.row(i).maxCoeff()).exp();
        out.row(i) = e / e.sum();
    }
    return out;
}

Matrix hconcat(const std::vector<Matrix>& parts)
{
    Index cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != parts.front().rows())
            throw NumericalError("hconcat: row count mismatch");
        cols += p.cols();
    }
    Matrix out(parts.front().rows(), cols);
    Index c = 0;
    for (const auto& p : parts) {
        out.middleCols(c, p.cols()) = p;
        c += p.cols();
    }
    return out;
}

Matrix vstack(const std::vector<Matrix>& parts)
{
    Index rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != parts.front().cols())
            throw NumericalError("vstack: column count mismatch");
        rows += p.rows();
    }
    Matrix out(rows, parts.front().cols());
    Index r = 0;
    for (const auto& p : parts) {
        out.middleRows(r, p.rows()) = p;
        r += p.rows();
    }
    return out;
}

} // namespace dimafx
