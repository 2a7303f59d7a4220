#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dimafx/numerics/tensor.hpp"

namespace dimafx::attribution {

inline constexpr std::size_t kMaxExactFeatures = 14;

/// Coalition value v(S); present[i] is true when feature i is in S.
using ValueFn = std::function<double(const std::vector<bool>& present)>;

struct ShapleyResult {
    std::vector<double> shap;
    double base_value = 0.0; // v(empty)
    double prediction = 0.0; // v(all)
    int permutations = 0;    // 0 for exact enumeration
    double residual = 0.0;   // |sum shap + base - prediction| before adjustment
};

/// Exact Shapley values by enumerating all 2^F coalitions. Throws ConfigError for F > 14.
ShapleyResult shapley_exact(const ValueFn& value, std::size_t features);

/**
 * Per-feature permutation sampling: for each feature, M random orderings and
 * their reversals; the estimate is the mean marginal contribution. The
 * pre-adjustment residual is reported, then the residual is spread over the
 * features in proportion to |shap| (equally if all are 0) so that
 * sum shap + base = prediction.
 */
ShapleyResult shapley_sampling(const ValueFn& value, std::size_t features, int permutations,
                               std::uint64_t seed);

/// Absolute values divided by their sum; all zeros stay zeros.
std::vector<double> normalize_abs(const std::vector<double>& shap);

} // namespace dimafx::attribution
