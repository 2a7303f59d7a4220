#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dimafx/error.hpp"

namespace dimafx {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x)
{
    return x.derived().array().isFinite().all();
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& x, std::string_view what)
{
    if (!all_finite(x))
        throw NumericalError(std::string(what) + ": non-finite value");
}

/**
 * Validated dense value: a shape plus row-major 64-bit data.
 *
 * This is the interchange form used by checkpoints and file formats; the
 * numerical code itself works on Eigen matrices. Rank 1 and rank 2 tensors
 * convert to and from Matrix (rank 1 maps to a row vector).
 */
class Tensor {
  public:
    Tensor() = default;
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor from_matrix(const Matrix& m);

    const std::vector<std::size_t>& shape() const { return shape_; }
    const std::vector<double>& data() const { return data_; }
    std::size_t size() const { return data_.size(); }
    std::size_t rank() const { return shape_.size(); }

    Matrix to_matrix() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

  private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

} // namespace dimafx
