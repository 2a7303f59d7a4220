#pragma once

#include <functional>

#include "dimafx/numerics/tensor.hpp"

namespace dimafx {

using ScalarFunction = std::function<double(const Matrix&)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every entry of x.
/// Throws NumericalError if f returns a non-finite value.
Matrix finite_difference_gradient(const ScalarFunction& f, const Matrix& x, double h = 1e-5);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor). The floor keeps near-zero
/// entries from dominating; it is the absolute scale below which differences count as noise.
double max_relative_error(const Matrix& a, const Matrix& b, double floor = 1e-6);

} // namespace dimafx
