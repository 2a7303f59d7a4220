#pragma once

#include <span>
#include <vector>

#include "dimafx/numerics/autodiff.hpp"
#include "dimafx/numerics/tensor.hpp"

namespace dimafx::objectives {

/**
 * Negative Cox partial log-likelihood, summed over events:
 *   L = -sum_{i in U} (r_i - log sum_{j: t_j >= t_i} exp(r_j))
 * Breslow ties (tied samples share the risk set). 0 when no sample has an event.
 */
double cox_loss(const Eigen::Ref<const Vector>& risks, std::span<const double> times,
                const std::vector<bool>& events);

/// dL/dr for cox_loss.
Vector cox_gradient(const Eigen::Ref<const Vector>& risks, std::span<const double> times,
                    const std::vector<bool>& events);

/// Taped cox_loss on a B x 1 risk column.
ad::Var cox_loss(ad::Var risks, std::span<const double> times, const std::vector<bool>& events);

/// Pooled representations and survival labels of one mini-batch.
struct BatchBundle {
    Matrix z_gg, z_hh, z_hg, z_gh; // B x d_z
    Vector risks;
    std::vector<double> times;
    std::vector<bool> events;

    Index size() const { return risks.size(); }
    /// Throws NumericalError on inconsistent batch sizes.
    void validate() const;
};

struct DisentanglementTerms {
    double dc_specific = 0.0; // DC(Z_gg, Z_hh)
    double dc_cross = 0.0;    // DC([Z_gg, Z_hh], [Z_hg, Z_gh])
    bool degenerate = false;  // some stack had zero distance variance

    double sum() const { return dc_specific + dc_cross; }
};

DisentanglementTerms disentanglement_terms(const BatchBundle& batch);

/// Taped distance correlation; a degenerate stack yields a constant 0 and sets *degenerate.
ad::Var distance_correlation(ad::Var x, ad::Var y, bool* degenerate = nullptr);

/// Taped L_dis = DC(Z_gg, Z_hh) + DC([Z_gg, Z_hh], [Z_hg, Z_gh]).
ad::Var disentanglement_loss(ad::Var z_gg, ad::Var z_hh, ad::Var z_hg, ad::Var z_gh,
                             bool* degenerate = nullptr);

struct LossWeights {
    double surv = 1.0;
    double dis = 7.0;
};

struct LossValues {
    double total = 0.0;
    double cox = 0.0;
    double dis = 0.0;
    bool degenerate = false;
};

LossValues total_loss(const BatchBundle& batch, const LossWeights& weights = {});

struct TapedLoss {
    ad::Var total;
    double cox = 0.0;
    double dis = 0.0;
    bool degenerate = false;
};

/// Taped total loss. Stacks are B x d_z, risks B x 1. The DC term needs B >= 2.
TapedLoss total_loss(ad::Var risks, ad::Var z_gg, ad::Var z_hh, ad::Var z_hg, ad::Var z_gh,
                     std::span<const double> times, const std::vector<bool>& events,
                     const LossWeights& weights = {});

} // namespace dimafx::objectives
