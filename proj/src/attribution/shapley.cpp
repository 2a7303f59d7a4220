#include "dimafx/attribution/shapley.hpp"

#include <bit>
#include <cmath>
#include <numeric>

#include "dimafx/numerics/rng.hpp"

namespace dimafx::attribution {

ShapleyResult shapley_exact(const ValueFn& value, std::size_t features)
{
    if (features == 0)
        throw ConfigError("shapley_exact: no features");
    if (features > kMaxExactFeatures)
        throw ConfigError("shapley_exact: " + std::to_string(features) + " features exceeds the limit of " +
                          std::to_string(kMaxExactFeatures));
    const std::size_t count = std::size_t{1} << features;
    std::vector<double> v(count);
    std::vector<bool> present(features);
    for (std::size_t s = 0; s < count; ++s) {
        for (std::size_t i = 0; i < features; ++i)
            present[i] = (s >> i) & 1U;
        v[s] = value(present);
    }

    // weight[k] = k! (F - k - 1)! / F!
    std::vector<double> weight(features);
    for (std::size_t k = 0; k < features; ++k)
        weight[k] = std::exp(std::lgamma(k + 1.0) + std::lgamma(static_cast<double>(features - k)) -
                             std::lgamma(features + 1.0));

    ShapleyResult r;
    r.shap.assign(features, 0.0);
    r.base_value = v.front();
    r.prediction = v.back();
    for (std::size_t s = 0; s < count; ++s) {
        const auto size = static_cast<std::size_t>(std::popcount(s));
        for (std::size_t i = 0; i < features; ++i)
            if (!((s >> i) & 1U))
                r.shap[i] += weight[size] * (v[s | (std::size_t{1} << i)] - v[s]);
    }
    r.residual = std::abs(std::accumulate(r.shap.begin(), r.shap.end(), 0.0) + r.base_value - r.prediction);
    return r;
}

ShapleyResult shapley_sampling(const ValueFn& value, std::size_t features, int permutations,
                               std::uint64_t seed)
{
    if (features == 0)
        throw ConfigError("shapley_sampling: no features");
    if (permutations < 1)
        throw ConfigError("shapley_sampling: permutations must be >= 1");

    ShapleyResult r;
    r.permutations = permutations;
    r.base_value = value(std::vector<bool>(features, false));
    r.prediction = value(std::vector<bool>(features, true));
    r.shap.assign(features, 0.0);

    const Rng root(seed);
    std::vector<std::size_t> others;
    std::vector<bool> present(features);
    for (std::size_t i = 0; i < features; ++i) {
        Rng rng = root.fork(i);
        double acc = 0.0;
        for (int m = 0; m < permutations; ++m) {
            // Predecessors of i in a uniform random ordering: a random prefix of a shuffle.
            others.clear();
            for (std::size_t j = 0; j < features; ++j)
                if (j != i)
                    others.push_back(j);
            rng.shuffle(others);
            const std::size_t cut = rng.index(features);
            for (int pass = 0; pass < 2; ++pass) {
                // pass 1 is the reversed ordering: predecessors are the complement.
                std::fill(present.begin(), present.end(), pass == 1);
                for (std::size_t k = 0; k < cut; ++k)
                    present[others[k]] = pass == 0;
                present[i] = false;
                const double without = value(present);
                present[i] = true;
                acc += value(present) - without;
            }
        }
        r.shap[i] = acc / (2.0 * permutations);
    }

    const double gap = r.prediction - r.base_value - std::accumulate(r.shap.begin(), r.shap.end(), 0.0);
    r.residual = std::abs(gap);
    double mass = 0.0;
    for (double s : r.shap)
        mass += std::abs(s);
    for (double& s : r.shap)
        s += mass > 0.0 ? gap * std::abs(s) / mass : gap / static_cast<double>(features);
    return r;
}

std::vector<double> normalize_abs(const std::vector<double>& shap)
{
    double total = 0.0;
    for (double s : shap)
        total += std::abs(s);
    std::vector<double> out(shap.size(), 0.0);
    if (total > 0.0)
        for (std::size_t i = 0; i < shap.size(); ++i)
            out[i] = std::abs(shap[i]) / total;
    return out;
}

} // namespace dimafx::attribution
