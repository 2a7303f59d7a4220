#include "dimafx/numerics/tensor.hpp"

#include <functional>
#include <numeric>

namespace dimafx {

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data))
{
    if (shape_.empty())
        throw NumericalError("Tensor: empty shape");
    for (auto extent : shape_) {
        if (extent == 0)
            throw NumericalError("Tensor: zero extent in shape");
    }
    const auto expected = std::accumulate(shape_.begin(), shape_.end(), std::size_t{1},
                                          std::multiplies<>());
    if (expected != data_.size()) {
        throw NumericalError("Tensor: data length " + std::to_string(data_.size()) +
                             " does not match shape product " + std::to_string(expected));
    }
    for (double v : data_) {
        if (!std::isfinite(v))
            throw NumericalError("Tensor: non-finite entry");
    }
}

Tensor Tensor::from_matrix(const Matrix& m)
{
    std::vector<double> data(static_cast<std::size_t>(m.size()));
    std::size_t k = 0;
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            data[k++] = m(i, j);
    return Tensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                  std::move(data));
}

Matrix Tensor::to_matrix() const
{
    if (rank() > 2)
        throw NumericalError("Tensor: rank > 2 has no matrix view");
    const Index rows = rank() == 2 ? static_cast<Index>(shape_[0]) : 1;
    const Index cols = static_cast<Index>(shape_.back());
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            m(i, j) = data_[k++];
    return m;
}

} // namespace dimafx
