#include "dimafx/metrics/survival.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

namespace dimafx::metrics {

namespace {

void check_lengths(std::size_t n, Times times, Events events, const char* who)
{
    if (times.size() != n || events.size() != n)
        throw NumericalError(std::string(who) + ": input lengths differ");
    if (n == 0)
        throw NumericalError(std::string(who) + ": empty input");
}

/// Fenwick tree over risk ranks holding a count and a weight per rank.
class RankTree {
  public:
    explicit RankTree(std::size_t n) : count_(n + 1, 0) {}

    void add(std::size_t rank)
    {
        for (std::size_t i = rank + 1; i < count_.size(); i += i & (~i + 1))
            ++count_[i];
    }

    /// Number of inserted entries with rank < r.
    std::int64_t below(std::size_t r) const
    {
        std::int64_t s = 0;
        for (std::size_t i = r; i > 0; i -= i & (~i + 1))
            s += count_[i];
        return s;
    }

  private:
    std::vector<std::int64_t> count_;
};

struct PairCounts {
    // Per event sample i: later samples with lower / equal risk, and all later samples.
    std::vector<std::int64_t> lower, equal, later;
};

/// For every sample, counts samples with strictly greater time, split by risk order.
PairCounts count_later_pairs(std::span<const double> risks, Times times)
{
    const std::size_t n = risks.size();
    std::vector<double> sorted(risks.begin(), risks.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    auto rank = [&](double r) {
        return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), r) -
                                        sorted.begin());
    };

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return times[a] > times[b]; });

    PairCounts pc{std::vector<std::int64_t>(n, 0), std::vector<std::int64_t>(n, 0),
                  std::vector<std::int64_t>(n, 0)};
    RankTree tree(sorted.size());
    std::int64_t inserted = 0;
    std::size_t g = 0;
    while (g < n) {
        std::size_t end = g;
        while (end < n && times[order[end]] == times[order[g]])
            ++end;
        for (std::size_t k = g; k < end; ++k) {
            const std::size_t i = order[k];
            const std::size_t r = rank(risks[i]);
            pc.lower[i] = tree.below(r);
            pc.equal[i] = tree.below(r + 1) - pc.lower[i];
            pc.later[i] = inserted;
        }
        for (std::size_t k = g; k < end; ++k) {
            tree.add(rank(risks[order[k]]));
            ++inserted;
        }
        g = end;
    }
    return pc;
}

SurvivalCurve product_limit(Times times, const std::vector<bool>& is_event)
{
    const std::size_t n = times.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

    SurvivalCurve c;
    double s = 1.0;
    std::size_t g = 0;
    while (g < n) {
        std::size_t end = g;
        std::size_t d = 0;
        while (end < n && times[order[end]] == times[order[g]]) {
            d += is_event[order[end]] ? 1 : 0;
            ++end;
        }
        if (d > 0) {
            const std::size_t at_risk = n - g;
            s *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
            c.times.push_back(times[order[g]]);
            c.survival.push_back(s);
            c.at_risk.push_back(at_risk);
            c.events.push_back(d);
        }
        g = end;
    }
    return c;
}

} // namespace

double concordance_index(std::span<const double> risks, Times times, Events events)
{
    check_lengths(risks.size(), times, events, "concordance_index");
    const PairCounts pc = count_later_pairs(risks, times);
    // Twice the concordant mass keeps half-credits integral.
    std::int64_t twice_concordant = 0;
    std::int64_t comparable = 0;
    for (std::size_t i = 0; i < risks.size(); ++i) {
        if (!events[i])
            continue;
        twice_concordant += 2 * pc.lower[i] + pc.equal[i];
        comparable += pc.later[i];
    }
    if (comparable == 0)
        throw NumericalError("concordance_index: no comparable pairs");
    return static_cast<double>(twice_concordant) / (2.0 * static_cast<double>(comparable));
}

double SurvivalCurve::at(double t) const
{
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    return it == times.begin() ? 1.0 : survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

double SurvivalCurve::before(double t) const
{
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    return it == times.begin() ? 1.0 : survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

SurvivalCurve kaplan_meier(Times times, Events events)
{
    check_lengths(times.size(), times, events, "kaplan_meier");
    return product_limit(times, events);
}

SurvivalCurve censoring_km(Times times, Events events)
{
    check_lengths(times.size(), times, events, "censoring_km");
    std::vector<bool> censored(events.size());
    for (std::size_t i = 0; i < events.size(); ++i)
        censored[i] = !events[i];
    return product_limit(times, censored);
}

double concordance_index_ipcw(std::span<const double> risks, Times times, Events events, double tau)
{
    check_lengths(risks.size(), times, events, "concordance_index_ipcw");
    if (!(tau > 0.0))
        throw NumericalError("concordance_index_ipcw: tau must be positive");
    const SurvivalCurve g = censoring_km(times, events);
    const PairCounts pc = count_later_pairs(risks, times);
    double concordant = 0.0;
    double comparable = 0.0;
    for (std::size_t i = 0; i < risks.size(); ++i) {
        if (!events[i] || !(times[i] < tau) || pc.later[i] == 0)
            continue;
        const double gi = g.before(times[i]);
        if (!(gi > 0.0))
            throw NumericalError("concordance_index_ipcw: censoring survival reaches 0 before an event");
        const double w = 1.0 / (gi * gi);
        concordant += w * (static_cast<double>(pc.lower[i]) + 0.5 * static_cast<double>(pc.equal[i]));
        comparable += w * static_cast<double>(pc.later[i]);
    }
    if (!(comparable > 0.0))
        throw NumericalError("concordance_index_ipcw: no comparable pairs before tau");
    return concordant / comparable;
}

LogRankResult logrank_test(Times times_a, Events events_a, Times times_b, Events events_b)
{
    check_lengths(times_a.size(), times_a, events_a, "logrank_test");
    check_lengths(times_b.size(), times_b, events_b, "logrank_test");
    std::vector<double> event_times;
    for (std::size_t i = 0; i < times_a.size(); ++i)
        if (events_a[i])
            event_times.push_back(times_a[i]);
    for (std::size_t i = 0; i < times_b.size(); ++i)
        if (events_b[i])
            event_times.push_back(times_b[i]);
    if (event_times.empty())
        throw NumericalError("logrank_test: no events");
    std::sort(event_times.begin(), event_times.end());
    event_times.erase(std::unique(event_times.begin(), event_times.end()), event_times.end());

    auto tally = [](Times t, Events e, double at, double& n, double& d) {
        n = 0.0;
        d = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] >= at)
                n += 1.0;
            if (t[i] == at && e[i])
                d += 1.0;
        }
    };

    LogRankResult r;
    for (double t : event_times) {
        double na, da, nb, db;
        tally(times_a, events_a, t, na, da);
        tally(times_b, events_b, t, nb, db);
        const double n = na + nb;
        const double d = da + db;
        r.observed_a += da;
        r.expected_a += d * na / n;
        if (n > 1.0)
            r.variance += d * (na / n) * (1.0 - na / n) * (n - d) / (n - 1.0);
    }
    if (!(r.variance > 0.0))
        throw NumericalError("logrank_test: zero variance (no informative event times)");
    const double diff = r.observed_a - r.expected_a;
    r.chi_square = diff * diff / r.variance;
    r.p_value = std::erfc(std::sqrt(r.chi_square / 2.0));
    return r;
}

PartialLikelihood cox_partial_likelihood(std::span<const double> x, double beta, Times times,
                                         Events events)
{
    const std::size_t n = x.size();
    check_lengths(n, times, events, "cox_partial_likelihood");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] > times[b]; });
    double shift = -std::numeric_limits<double>::infinity();
    for (double v : x)
        shift = std::max(shift, beta * v);

    PartialLikelihood pl{0.0, 0.0, 0.0};
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    std::size_t g = 0;
    while (g < n) {
        std::size_t end = g;
        while (end < n && times[order[end]] == times[order[g]]) {
            const double xi = x[order[end]];
            const double w = std::exp(beta * xi - shift);
            s0 += w;
            s1 += w * xi;
            s2 += w * xi * xi;
            ++end;
        }
        for (std::size_t k = g; k < end; ++k) {
            const std::size_t i = order[k];
            if (!events[i])
                continue;
            const double mean = s1 / s0;
            pl.log_likelihood += beta * x[i] - (shift + std::log(s0));
            pl.score += x[i] - mean;
            pl.information += s2 / s0 - mean * mean;
        }
        g = end;
    }
    return pl;
}

HazardRatioResult hazard_ratio(const std::vector<bool>& in_group, Times times, Events events)
{
    const std::size_t n = in_group.size();
    check_lengths(n, times, events, "hazard_ratio");
    const auto members = std::count(in_group.begin(), in_group.end(), true);
    if (members == 0 || static_cast<std::size_t>(members) == n)
        throw NumericalError("hazard_ratio: both groups must be represented");
    if (std::none_of(events.begin(), events.end(), [](bool e) { return e; }))
        throw NumericalError("hazard_ratio: no events");

    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = in_group[i] ? 1.0 : 0.0;

    HazardRatioResult r;
    double beta = 0.0;
    PartialLikelihood pl = cox_partial_likelihood(x, beta, times, events);
    for (r.iterations = 1; r.iterations <= 100; ++r.iterations) {
        if (!(pl.information > 0.0))
            break;
        double step = std::clamp(pl.score / pl.information, -10.0, 10.0);
        PartialLikelihood next = cox_partial_likelihood(x, beta + step, times, events);
        for (int halve = 0; halve < 40 && next.log_likelihood < pl.log_likelihood; ++halve) {
            step *= 0.5;
            next = cox_partial_likelihood(x, beta + step, times, events);
        }
        beta += step;
        pl = next;
        if (std::abs(step) < 1e-8) {
            r.converged = true;
            break;
        }
    }
    r.iterations = std::min(r.iterations, 100);
    r.beta = beta;
    r.score = pl.score;
    r.hazard_ratio = std::exp(beta);
    return r;
}

StratificationResult stratify_by_median(std::span<const double> risks, Times times, Events events)
{
    const std::size_t n = risks.size();
    check_lengths(n, times, events, "stratify_by_median");
    std::vector<double> sorted(risks.begin(), risks.end());
    std::sort(sorted.begin(), sorted.end());
    const double median =
        n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

    StratificationResult r;
    r.median_risk = median;
    r.high.resize(n);
    std::vector<double> th, tl;
    std::vector<bool> eh, el;
    for (std::size_t i = 0; i < n; ++i) {
        r.high[i] = risks[i] > median;
        (r.high[i] ? th : tl).push_back(times[i]);
        (r.high[i] ? eh : el).push_back(events[i]);
    }
    r.n_high = th.size();
    r.n_low = tl.size();
    if (r.n_high == 0 || r.n_low == 0)
        throw DataError("stratify: degenerate median split (all risks identical)");
    r.km_high = kaplan_meier(th, eh);
    r.km_low = kaplan_meier(tl, el);
    const LogRankResult lr = logrank_test(th, eh, tl, el);
    r.chi_square = lr.chi_square;
    r.p_value = lr.p_value;
    const HazardRatioResult hr = hazard_ratio(r.high, times, events);
    r.hazard_ratio = hr.hazard_ratio;
    r.hr_converged = hr.converged;
    return r;
}

} // namespace dimafx::metrics
