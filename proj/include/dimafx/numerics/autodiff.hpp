#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "dimafx/numerics/kernels.hpp"

namespace dimafx::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
  public:
    Var() = default;

    const Matrix& value() const;
    Index rows() const { return value().rows(); }
    Index cols() const { return value().cols(); }
    double scalar() const;

    Tape& tape() const { return *tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

  private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/**
 * Define-by-run computation graph.
 *
 * Nodes are appended in evaluation order, so the node index is already a
 * topological order; backward() walks it once in reverse. Nodes that do not
 * depend on any variable are stored without a backward rule.
 */
class Tape {
  public:
    using Backward = std::function<void(const Matrix& grad_out, Tape& tape)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var variable(Matrix value);
    Var constant(Matrix value);

    /// Records an op result. `backward` is dropped when no parent needs a gradient.
    Var record(Matrix value, std::initializer_list<Var> parents, Backward backward);
    Var record(Matrix value, const std::vector<Var>& parents, Backward backward);

    /// Reverse sweep from a 1x1 root. Clears gradients from any earlier sweep.
    void backward(Var root);

    /// Gradient of the last backward root w.r.t. v (zeros if v was unreachable).
    Matrix grad(Var v) const;

    bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

    template <typename Derived>
    void accumulate(Var v, const Eigen::MatrixBase<Derived>& g)
    {
        Node& n = nodes_[v.id()];
        if (!n.requires_grad)
            return;
        if (n.grad.size() == 0)
            n.grad = g;
        else
            n.grad += g;
    }

    std::size_t size() const { return nodes_.size(); }

  private:
    friend class Var;

    struct Node {
        Matrix value;
        Matrix grad;
        Backward backward;
        bool requires_grad = false;
    };

    std::vector<Node> nodes_;
};

// Differentiable ops. Names and semantics mirror kernels.hpp.

Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);
Var transpose(Var a);
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var hadamard(Var a, Var b);
/// Element-wise a / b; b must have no zeros.
Var quotient(Var a, Var b);
Var scale(Var a, double s);
Var add_row(Var a, Var row);
Var row(Var a, Index i);
Var block_cols(Var a, Index start, Index count);
Var hconcat(const std::vector<Var>& parts);
Var vstack(const std::vector<Var>& parts);
Var selu(Var x);
Var softmax_rows(Var x);
Var sum(Var x);
Var mean(Var x);
/// sqrt(max(x, 0)) element-wise, with zero gradient where x <= 0.
Var sqrt_clamped(Var x);
/// Euclidean distances between rows; zero gradient on coincident rows.
Var pairwise_distance(Var x);
/// a - row means - column means + grand mean.
Var double_center(Var a);

} // namespace dimafx::ad
