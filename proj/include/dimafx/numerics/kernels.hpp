#pragma once

// Plain (non-recording) dense kernels. Every function here has a same-named
// overload on ad::Var in autodiff.hpp, so model code written as a template
// over the matrix type runs on either backend.

#include <cmath>
#include <vector>

#include "dimafx/numerics/tensor.hpp"

namespace dimafx {

inline constexpr double kSeluAlpha = 1.6732632423543772;
inline constexpr double kSeluScale = 1.0507009873554805;

inline double selu(double x)
{
    return x > 0.0 ? kSeluScale * x : kSeluScale * kSeluAlpha * std::expm1(x);
}

inline Matrix selu(const Matrix& x)
{
    return x.unaryExpr([](double v) { return selu(v); });
}

/// Numerically stable softmax; throws on empty input.
Vector softmax(const Eigen::Ref<const Vector>& v);

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& x);

inline Matrix matmul(const Matrix& a, const Matrix& b) { return a * b; }

/// a * b^T
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) { return a * b.transpose(); }

inline Matrix transpose(const Matrix& a) { return a.transpose(); }

inline Matrix scale(const Matrix& a, double s) { return a * s; }

/// Adds a 1 x cols row to every row of a.
inline Matrix add_row(const Matrix& a, const Matrix& row) { return a.rowwise() + row.row(0); }

inline Matrix row(const Matrix& a, Index i) { return a.row(i); }

inline Matrix block_cols(const Matrix& a, Index start, Index count)
{
    return a.middleCols(start, count);
}

Matrix hconcat(const std::vector<Matrix>& parts);
Matrix vstack(const std::vector<Matrix>& parts);

} // namespace dimafx
