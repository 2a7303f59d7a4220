#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dimafx/numerics/tensor.hpp"

namespace dimafx::metrics {

using Times = std::span<const double>;
using Events = const std::vector<bool>&;

/**
 * Harrell's C. Comparable pairs: time_i < time_j with event_i. Concordant if
 * risk_i > risk_j; tied risks count 0.5. Throws NumericalError without
 * comparable pairs.
 */
double concordance_index(std::span<const double> risks, Times times, Events events);

/// Product-limit step function. `times` are the distinct times with d > 0.
struct SurvivalCurve {
    std::vector<double> times;
    std::vector<double> survival;
    std::vector<std::size_t> at_risk;
    std::vector<std::size_t> events;

    /// S(t), right-continuous; S(t) = 1 before the first step.
    double at(double t) const;
    /// S(t-), the value just before t.
    double before(double t) const;
};

SurvivalCurve kaplan_meier(Times times, Events events);

/// Kaplan-Meier of the censoring distribution G (event flags inverted).
SurvivalCurve censoring_km(Times times, Events events);

/**
 * Uno's truncated IPCW concordance. Pairs: event_i and time_i < min(time_j, tau),
 * each weighted by G(time_i-)^-2 with G from censoring_km of the same data.
 */
double concordance_index_ipcw(std::span<const double> risks, Times times, Events events,
                              double tau);

struct LogRankResult {
    double chi_square = 0.0;
    double p_value = 1.0;
    double observed_a = 0.0;
    double expected_a = 0.0;
    double variance = 0.0;
};

/// Two-group log-rank test; p is the 1-df chi-square upper tail erfc(sqrt(chi2 / 2)).
LogRankResult logrank_test(Times times_a, Events events_a, Times times_b, Events events_b);

struct HazardRatioResult {
    double hazard_ratio = 1.0;
    double beta = 0.0;
    double score = 0.0; // partial-likelihood gradient at beta
    int iterations = 0;
    bool converged = false;
};

/// Univariate Cox fit on a binary group indicator (Breslow ties), Newton-Raphson
/// until |delta beta| < 1e-8 or 100 iterations. Non-convergence is reported, not thrown.
HazardRatioResult hazard_ratio(const std::vector<bool>& in_group, Times times, Events events);

/// Breslow partial log-likelihood and its first two derivatives for a scalar covariate.
struct PartialLikelihood {
    double log_likelihood;
    double score;
    double information;
};
PartialLikelihood cox_partial_likelihood(std::span<const double> covariate, double beta, Times times,
                                         Events events);

struct StratificationResult {
    double hazard_ratio = 1.0;
    bool hr_converged = false;
    double chi_square = 0.0;
    double p_value = 1.0;
    double median_risk = 0.0;
    std::size_t n_high = 0;
    std::size_t n_low = 0;
    std::vector<bool> high;
    SurvivalCurve km_high;
    SurvivalCurve km_low;
};

/// Median split (risk > median is high risk; ties at the median go low), KM per
/// group, log-rank and high-vs-low hazard ratio. Throws DataError if a group is empty.
StratificationResult stratify_by_median(std::span<const double> risks, Times times, Events events);

} // namespace dimafx::metrics
