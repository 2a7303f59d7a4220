#include "dimafx/numerics/autodiff.hpp"

#include <string>

namespace dimafx::ad {

namespace {

void require_same_tape(Var a, Var b)
{
    if (&a.tape() != &b.tape())
        throw NumericalError("autodiff: operands recorded on different tapes");
}

void require_same_shape(Var a, Var b, const char* op)
{
    require_same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw NumericalError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                             "x" + std::to_string(a.cols()) + " vs " +
                             std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
}

} // namespace

const Matrix& Var::value() const { return tape_->nodes_[id_].value; }

double Var::scalar() const
{
    const Matrix& v = value();
    if (v.size() != 1)
        throw NumericalError("Var::scalar on non-scalar node");
    return v(0, 0);
}

Var Tape::variable(Matrix value)
{
    nodes_.push_back(Node{std::move(value), Matrix(), nullptr, true});
    return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value)
{
    nodes_.push_back(Node{std::move(value), Matrix(), nullptr, false});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, Backward backward)
{
    bool needs = false;
    for (const Var& p : parents)
        needs = needs || nodes_[p.id()].requires_grad;
    nodes_.push_back(Node{std::move(value), Matrix(), needs ? std::move(backward) : nullptr, needs});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, const std::vector<Var>& parents, Backward backward)
{
    bool needs = false;
    for (const Var& p : parents)
        needs = needs || nodes_[p.id()].requires_grad;
    nodes_.push_back(Node{std::move(value), Matrix(), needs ? std::move(backward) : nullptr, needs});
    return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var root)
{
    if (&root.tape() != this)
        throw NumericalError("backward: root belongs to another tape");
    if (root.value().size() != 1)
        throw NumericalError("backward: root must be a scalar");
    for (auto& n : nodes_)
        n.grad.resize(0, 0);
    if (!nodes_[root.id()].requires_grad)
        return;
    nodes_[root.id()].grad = Matrix::Ones(1, 1);
    for (std::size_t i = root.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.backward || n.grad.size() == 0)
            continue;
        // Copy: the rule may accumulate into nodes_ and we must not alias.
        const Matrix g = n.grad;
        n.backward(g, *this);
    }
}

Matrix Tape::grad(Var v) const
{
    const Node& n = nodes_[v.id()];
    if (n.grad.size() == 0)
        return Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

Var matmul(Var a, Var b)
{
    require_same_tape(a, b);
    if (a.cols() != b.rows())
        throw NumericalError("matmul: inner dimension mismatch");
    return a.tape().record(a.value() * b.value(), {a, b}, [a, b](const Matrix& g, Tape& t) {
        if (t.requires_grad(a))
            t.accumulate(a, g * b.value().transpose());
        if (t.requires_grad(b))
            t.accumulate(b, a.value().transpose() * g);
    });
}

Var matmul_nt(Var a, Var b)
{
    require_same_tape(a, b);
    if (a.cols() != b.cols())
        throw NumericalError("matmul_nt: inner dimension mismatch");
    return a.tape().record(a.value() * b.value().transpose(), {a, b},
                           [a, b](const Matrix& g, Tape& t) {
                               if (t.requires_grad(a))
                                   t.accumulate(a, g * b.value());
                               if (t.requires_grad(b))
                                   t.accumulate(b, g.transpose() * a.value());
                           });
}

Var transpose(Var a)
{
    return a.tape().record(a.value().transpose(), {a},
                           [a](const Matrix& g, Tape& t) { t.accumulate(a, g.transpose()); });
}

Var operator+(Var a, Var b)
{
    require_same_shape(a, b, "add");
    return a.tape().record(a.value() + b.value(), {a, b}, [a, b](const Matrix& g, Tape& t) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Var operator-(Var a, Var b)
{
    require_same_shape(a, b, "sub");
    return a.tape().record(a.value() - b.value(), {a, b}, [a, b](const Matrix& g, Tape& t) {
        t.accumulate(a, g);
        t.accumulate(b, -g);
    });
}

Var hadamard(Var a, Var b)
{
    require_same_shape(a, b, "hadamard");
    return a.tape().record(a.value().cwiseProduct(b.value()), {a, b},
                           [a, b](const Matrix& g, Tape& t) {
                               if (t.requires_grad(a))
                                   t.accumulate(a, g.cwiseProduct(b.value()));
                               if (t.requires_grad(b))
                                   t.accumulate(b, g.cwiseProduct(a.value()));
                           });
}

Var quotient(Var a, Var b)
{
    require_same_shape(a, b, "quotient");
    Matrix out = a.value().cwiseQuotient(b.value());
    return a.tape().record(out, {a, b}, [a, b, out](const Matrix& g, Tape& t) {
        if (t.requires_grad(a))
            t.accumulate(a, g.cwiseQuotient(b.value()));
        if (t.requires_grad(b))
            t.accumulate(b, -g.cwiseProduct(out).cwiseQuotient(b.value()));
    });
}

Var scale(Var a, double s)
{
    return a.tape().record(a.value() * s, {a},
                           [a, s](const Matrix& g, Tape& t) { t.accumulate(a, g * s); });
}

Var add_row(Var a, Var r)
{
    require_same_tape(a, r);
    if (r.rows() != 1 || r.cols() != a.cols())
        throw NumericalError("add_row: bias must be 1 x cols");
    return a.tape().record(a.value().rowwise() + r.value().row(0), {a, r},
                           [a, r](const Matrix& g, Tape& t) {
                               t.accumulate(a, g);
                               if (t.requires_grad(r))
                                   t.accumulate(r, g.colwise().sum());
                           });
}

Var row(Var a, Index i)
{
    if (i < 0 || i >= a.rows())
        throw NumericalError("row: index out of range");
    return a.tape().record(a.value().row(i), {a}, [a, i](const Matrix& g, Tape& t) {
        Matrix full = Matrix::Zero(a.rows(), a.cols());
        full.row(i) = g.row(0);
        t.accumulate(a, full);
    });
}

Var block_cols(Var a, Index start, Index count)
{
    if (start < 0 || count < 0 || start + count > a.cols())
        throw NumericalError("block_cols: range out of bounds");
    return a.tape().record(a.value().middleCols(start, count), {a},
                           [a, start, count](const Matrix& g, Tape& t) {
                               Matrix full = Matrix::Zero(a.rows(), a.cols());
                               full.middleCols(start, count) = g;
                               t.accumulate(a, full);
                           });
}

Var hconcat(const std::vector<Var>& parts)
{
    if (parts.empty())
        throw NumericalError("hconcat: no parts");
    std::vector<Matrix> values;
    values.reserve(parts.size());
    for (const Var& p : parts) {
        require_same_tape(p, parts.front());
        values.push_back(p.value());
    }
    return parts.front().tape().record(dimafx::hconcat(values), parts,
                                       [parts](const Matrix& g, Tape& t) {
                                           Index c = 0;
                                           for (const Var& p : parts) {
                                               t.accumulate(p, g.middleCols(c, p.cols()));
                                               c += p.cols();
                                           }
                                       });
}

Var vstack(const std::vector<Var>& parts)
{
    if (parts.empty())
        throw NumericalError("vstack: no parts");
    std::vector<Matrix> values;
    values.reserve(parts.size());
    for (const Var& p : parts) {
        require_same_tape(p, parts.front());
        values.push_back(p.value());
    }
    return parts.front().tape().record(dimafx::vstack(values), parts,
                                       [parts](const Matrix& g, Tape& t) {
                                           Index r = 0;
                                           for (const Var& p : parts) {
                                               t.accumulate(p, g.middleRows(r, p.rows()));
                                               r += p.rows();
                                           }
                                       });
}

Var selu(Var x)
{
    return x.tape().record(dimafx::selu(x.value()), {x}, [x](const Matrix& g, Tape& t) {
        const Matrix d = x.value().unaryExpr([](double v) {
            return v > 0.0 ? kSeluScale : kSeluScale * kSeluAlpha * std::exp(v);
        });
        t.accumulate(x, g.cwiseProduct(d));
    });
}

Var softmax_rows(Var x)
{
    Matrix y = dimafx::softmax_rows(x.value());
    return x.tape().record(y, {x}, [x, y](const Matrix& g, Tape& t) {
        const Vector dots = g.cwiseProduct(y).rowwise().sum();
        t.accumulate(x, y.cwiseProduct(g - dots.replicate(1, g.cols())));
    });
}

Var sum(Var x)
{
    Matrix out(1, 1);
    out(0, 0) = x.value().sum();
    return x.tape().record(out, {x}, [x](const Matrix& g, Tape& t) {
        t.accumulate(x, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
    });
}

Var mean(Var x)
{
    const double n = static_cast<double>(x.value().size());
    Matrix out(1, 1);
    out(0, 0) = x.value().sum() / n;
    return x.tape().record(out, {x}, [x, n](const Matrix& g, Tape& t) {
        t.accumulate(x, Matrix::Constant(x.rows(), x.cols(), g(0, 0) / n));
    });
}

Var sqrt_clamped(Var x)
{
    Matrix y = x.value().unaryExpr([](double v) { return v > 0.0 ? std::sqrt(v) : 0.0; });
    return x.tape().record(y, {x}, [x, y](const Matrix& g, Tape& t) {
        Matrix d(y.rows(), y.cols());
        for (Index i = 0; i < y.size(); ++i)
            d(i) = y(i) > 0.0 ? g(i) * 0.5 / y(i) : 0.0;
        t.accumulate(x, d);
    });
}

Var pairwise_distance(Var x)
{
    const Matrix& xv = x.value();
    const Index n = xv.rows();
    Matrix d = Matrix::Zero(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index k = j + 1; k < n; ++k)
            d(j, k) = d(k, j) = (xv.row(j) - xv.row(k)).norm();
    return x.tape().record(d, {x}, [x, d](const Matrix& g, Tape& t) {
        const Matrix& xv = x.value();
        const Index n = xv.rows();
        Matrix w = Matrix::Zero(n, n);
        for (Index j = 0; j < n; ++j)
            for (Index k = 0; k < n; ++k)
                if (d(j, k) > 0.0)
                    w(j, k) = (g(j, k) + g(k, j)) / d(j, k);
        const Vector row_sums = w.rowwise().sum();
        t.accumulate(x, row_sums.asDiagonal() * xv - w * xv);
    });
}

namespace {

Matrix center(const Matrix& a)
{
    const Vector row_means = a.rowwise().mean();
    const RowVector col_means = a.colwise().mean();
    const double grand = a.mean();
    Matrix out = a;
    out.colwise() -= row_means;
    out.rowwise() -= col_means;
    out.array() += grand;
    return out;
}

} // namespace

Var double_center(Var a)
{
    // Centering is a self-adjoint linear map, so its adjoint is itself.
    return a.tape().record(center(a.value()), {a},
                           [a](const Matrix& g, Tape& t) { t.accumulate(a, center(g)); });
}

} // namespace dimafx::ad
