#include "dimafx/objectives/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dimafx/metrics/dependence.hpp"

namespace dimafx::objectives {

namespace {

void check_labels(Index n, std::span<const double> times, const std::vector<bool>& events)
{
    if (n < 1)
        throw NumericalError("cox_loss: empty batch");
    if (static_cast<Index>(times.size()) != n || static_cast<Index>(events.size()) != n)
        throw NumericalError("cox_loss: risks, times and events differ in length");
    for (double t : times)
        if (!std::isfinite(t))
            throw NumericalError("cox_loss: times: non-finite value");
}

struct CoxPieces {
    double loss = 0.0;
    Vector grad;
};

// Risk-set sums are shifted by max(r) so exp never overflows.
CoxPieces cox_pieces(const Eigen::Ref<const Vector>& r, std::span<const double> times,
                     const std::vector<bool>& events, bool want_grad)
{
    const Index n = r.size();
    check_labels(n, times, events);
    require_finite(r, "cox_loss: risks");
    const double shift = r.maxCoeff();

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return times[a] > times[b]; });

    // Descending time: risk-set sum S_i for every sample (ties grouped).
    Vector risk_sum(n);
    double running = 0.0;
    for (std::size_t g = 0; g < order.size();) {
        std::size_t end = g;
        while (end < order.size() && times[order[end]] == times[order[g]])
            running += std::exp(r(order[end++]) - shift);
        for (std::size_t k = g; k < end; ++k)
            risk_sum(order[k]) = running;
        g = end;
    }

    CoxPieces out;
    for (Index i = 0; i < n; ++i)
        if (events[i])
            out.loss -= r(i) - shift - std::log(risk_sum(i));
    if (!want_grad)
        return out;

    // dL/dr_k = -[k in U] + exp(r_k) * sum_{i in U, t_i <= t_k} 1 / S_i.
    out.grad = Vector::Zero(n);
    double inv_acc = 0.0;
    for (std::size_t g = order.size(); g > 0;) {
        std::size_t begin = g;
        while (begin > 0 && times[order[begin - 1]] == times[order[g - 1]]) {
            --begin;
            if (events[order[begin]])
                inv_acc += 1.0 / risk_sum(order[begin]);
        }
        for (std::size_t k = begin; k < g; ++k) {
            const Index j = order[k];
            out.grad(j) = std::exp(r(j) - shift) * inv_acc - (events[j] ? 1.0 : 0.0);
        }
        g = begin;
    }
    return out;
}

} // namespace

double cox_loss(const Eigen::Ref<const Vector>& risks, std::span<const double> times,
                const std::vector<bool>& events)
{
    return cox_pieces(risks, times, events, false).loss;
}

Vector cox_gradient(const Eigen::Ref<const Vector>& risks, std::span<const double> times,
                    const std::vector<bool>& events)
{
    return cox_pieces(risks, times, events, true).grad;
}

ad::Var cox_loss(ad::Var risks, std::span<const double> times, const std::vector<bool>& events)
{
    if (risks.cols() != 1)
        throw NumericalError("cox_loss: risks must be a column");
    const Vector r = risks.value().col(0);
    CoxPieces p = cox_pieces(r, times, events, true);
    Matrix value(1, 1);
    value(0, 0) = p.loss;
    return risks.tape().record(std::move(value), {risks},
                               [risks, g = std::move(p.grad)](const Matrix& go, ad::Tape& t) {
                                   t.accumulate(risks, g * go(0, 0));
                               });
}

void BatchBundle::validate() const
{
    const Index n = risks.size();
    if (z_gg.rows() != n || z_hh.rows() != n || z_hg.rows() != n || z_gh.rows() != n ||
        static_cast<Index>(times.size()) != n || static_cast<Index>(events.size()) != n)
        throw NumericalError("batch bundle: inconsistent batch sizes");
}

DisentanglementTerms disentanglement_terms(const BatchBundle& batch)
{
    batch.validate();
    const auto d1 = metrics::distance_correlation(batch.z_gg, batch.z_hh);
    const auto d2 = metrics::distance_correlation(hconcat({batch.z_gg, batch.z_hh}),
                                                  hconcat({batch.z_hg, batch.z_gh}));
    return {d1.value, d2.value, d1.degenerate || d2.degenerate};
}

ad::Var distance_correlation(ad::Var x, ad::Var y, bool* degenerate)
{
    if (x.rows() != y.rows())
        throw NumericalError("distance_correlation: row counts differ");
    if (x.rows() < 2)
        throw NumericalError("distance_correlation: need at least 2 rows");
    const ad::Var a = ad::double_center(ad::pairwise_distance(x));
    const ad::Var b = ad::double_center(ad::pairwise_distance(y));
    const ad::Var vx = ad::mean(ad::hadamard(a, a));
    const ad::Var vy = ad::mean(ad::hadamard(b, b));
    if (!(vx.scalar() > 0.0) || !(vy.scalar() > 0.0)) {
        if (degenerate)
            *degenerate = true;
        return x.tape().constant(Matrix::Zero(1, 1));
    }
    const ad::Var num = ad::sqrt_clamped(ad::mean(ad::hadamard(a, b)));
    const ad::Var den = ad::sqrt_clamped(ad::sqrt_clamped(ad::hadamard(vx, vy)));
    return ad::quotient(num, den);
}

ad::Var disentanglement_loss(ad::Var z_gg, ad::Var z_hh, ad::Var z_hg, ad::Var z_gh, bool* degenerate)
{
    const ad::Var d1 = distance_correlation(z_gg, z_hh, degenerate);
    const ad::Var d2 = distance_correlation(ad::hconcat({z_gg, z_hh}), ad::hconcat({z_hg, z_gh}),
                                            degenerate);
    return d1 + d2;
}

LossValues total_loss(const BatchBundle& batch, const LossWeights& weights)
{
    batch.validate();
    LossValues v;
    v.cox = cox_loss(batch.risks, batch.times, batch.events);
    const DisentanglementTerms t = disentanglement_terms(batch);
    v.dis = t.sum();
    v.degenerate = t.degenerate;
    v.total = weights.surv * v.cox + weights.dis * v.dis;
    return v;
}

TapedLoss total_loss(ad::Var risks, ad::Var z_gg, ad::Var z_hh, ad::Var z_hg, ad::Var z_gh,
                     std::span<const double> times, const std::vector<bool>& events,
                     const LossWeights& weights)
{
    TapedLoss out;
    const ad::Var cox = cox_loss(risks, times, events);
    out.cox = cox.scalar();
    ad::Var total = ad::scale(cox, weights.surv);
    if (weights.dis != 0.0) {
        const ad::Var dis = disentanglement_loss(z_gg, z_hh, z_hg, z_gh, &out.degenerate);
        out.dis = dis.scalar();
        total = total + ad::scale(dis, weights.dis);
    } else {
        // Recorded for the history only.
        BatchBundle b{z_gg.value(), z_hh.value(), z_hg.value(), z_gh.value(),
                      risks.value().col(0), {times.begin(), times.end()}, events};
        const DisentanglementTerms t = disentanglement_terms(b);
        out.dis = t.sum();
        out.degenerate = t.degenerate;
    }
    out.total = total;
    return out;
}

} // namespace dimafx::objectives
