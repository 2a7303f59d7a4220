#include "dimafx/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace dimafx {

Matrix finite_difference_gradient(const ScalarFunction& f, const Matrix& x, double h)
{
    Matrix grad(x.rows(), x.cols());
    Matrix probe = x;
    for (Index i = 0; i < x.size(); ++i) {
        const double original = probe(i);
        probe(i) = original + h;
        const double up = f(probe);
        probe(i) = original - h;
        const double down = f(probe);
        probe(i) = original;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw NumericalError("finite_difference_gradient: function returned non-finite value");
        grad(i) = (up - down) / (2.0 * h);
    }
    return grad;
}

double max_relative_error(const Matrix& a, const Matrix& b, double floor)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw NumericalError("max_relative_error: shape mismatch");
    double worst = 0.0;
    for (Index i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a(i)), std::abs(b(i)), floor});
        worst = std::max(worst, std::abs(a(i) - b(i)) / denom);
    }
    return worst;
}

} // namespace dimafx
