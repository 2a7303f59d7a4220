#include "dimafx/data/cohort.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "dimafx/numerics/rng.hpp"

namespace dimafx::data {

std::vector<Index> PathwayCatalog::gene_set_sizes() const
{
    std::vector<Index> sizes;
    sizes.reserve(entries.size());
    for (const auto& p : entries)
        sizes.push_back(static_cast<Index>(p.gene_indices.size()));
    return sizes;
}

void PathwayCatalog::validate() const
{
    if (entries.empty())
        throw DataError("pathway catalog is empty");
    std::set<std::string> names;
    for (const auto& p : entries) {
        if (p.name.empty())
            throw DataError("pathway catalog: empty pathway name");
        if (!names.insert(p.name).second)
            throw DataError("pathway catalog: duplicate name '" + p.name + "'");
        if (p.gene_indices.empty())
            throw DataError("pathway catalog: pathway '" + p.name + "' has no genes");
        for (Index g : p.gene_indices) {
            if (g < 0)
                throw DataError("pathway catalog: negative gene index in '" + p.name + "'");
        }
    }
}

namespace {

template <typename A, typename B>
bool same_matrix(const A& a, const B& b)
{
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

} // namespace

bool operator==(const CohortSample& a, const CohortSample& b)
{
    if (a.sample_id != b.sample_id || a.site_id != b.site_id || a.time != b.time ||
        a.event != b.event || !same_matrix(a.patch_features, b.patch_features) ||
        a.pathway_inputs.size() != b.pathway_inputs.size())
        return false;
    for (std::size_t i = 0; i < a.pathway_inputs.size(); ++i) {
        if (!same_matrix(a.pathway_inputs[i], b.pathway_inputs[i]))
            return false;
    }
    return true;
}

bool operator==(const Cohort& a, const Cohort& b)
{
    return a.catalog == b.catalog && a.samples == b.samples;
}

Index Cohort::patch_dim() const
{
    return samples.empty() ? 0 : samples.front().patch_features.cols();
}

std::vector<double> Cohort::times() const
{
    std::vector<double> t;
    t.reserve(samples.size());
    for (const auto& s : samples)
        t.push_back(s.time);
    return t;
}

std::vector<bool> Cohort::events() const
{
    std::vector<bool> e;
    e.reserve(samples.size());
    for (const auto& s : samples)
        e.push_back(s.event);
    return e;
}

std::size_t Cohort::event_count() const
{
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.event; }));
}

void Cohort::validate() const
{
    catalog.validate();
    const auto sizes = catalog.gene_set_sizes();
    const Index dim = patch_dim();
    for (const auto& s : samples) {
        const std::string where = "sample '" + s.sample_id + "'";
        if (s.sample_id.empty())
            throw DataError("cohort: empty sample_id");
        if (s.patch_features.rows() == 0)
            throw DataError(where + ": no patch features");
        if (s.patch_features.cols() != dim)
            throw DataError(where + ": patch dimension " + std::to_string(s.patch_features.cols()) +
                            " differs from cohort dimension " + std::to_string(dim));
        if (!all_finite(s.patch_features))
            throw DataError(where + ": non-finite patch feature");
        if (s.pathway_inputs.size() != catalog.size())
            throw DataError(where + ": " + std::to_string(s.pathway_inputs.size()) +
                            " pathway inputs, catalog has " + std::to_string(catalog.size()));
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            if (s.pathway_inputs[i].size() != sizes[i])
                throw DataError(where + ": pathway '" + catalog.entries[i].name + "' has " +
                                std::to_string(s.pathway_inputs[i].size()) + " values, expected " +
                                std::to_string(sizes[i]));
            if (!all_finite(s.pathway_inputs[i]))
                throw DataError(where + ": non-finite pathway input");
        }
        if (!(s.time >= 0.0) || !std::isfinite(s.time))
            throw DataError(where + ": invalid time " + std::to_string(s.time));
    }
}

Cohort truncate_followup(Cohort cohort, double tau)
{
    for (auto& s : cohort.samples) {
        if (s.time > tau) {
            s.time = tau;
            s.event = false;
        }
    }
    return cohort;
}

std::vector<std::size_t> FoldSplit::train_indices(std::size_t fold) const
{
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        if (f == fold)
            continue;
        out.insert(out.end(), folds[f].begin(), folds[f].end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

FoldSplit split_stratified(const Cohort& cohort, std::size_t k, std::uint64_t seed)
{
    if (k < 2)
        throw ConfigError("split_stratified: need at least 2 folds");
    std::map<std::string, std::vector<std::size_t>> by_site;
    for (std::size_t i = 0; i < cohort.samples.size(); ++i)
        by_site[cohort.samples[i].site_id].push_back(i);
    if (by_site.size() < k) {
        throw DataError("split_stratified: " + std::to_string(by_site.size()) +
                        " sites cannot fill " + std::to_string(k) + " folds");
    }

    std::vector<const std::vector<std::size_t>*> sites;
    for (const auto& [name, members] : by_site)
        sites.push_back(&members);
    Rng rng(seed);
    rng.shuffle(sites);
    std::stable_sort(sites.begin(), sites.end(),
                     [](const auto* a, const auto* b) { return a->size() > b->size(); });

    FoldSplit split;
    split.folds.resize(k);
    for (const auto* members : sites) {
        auto smallest = std::min_element(
            split.folds.begin(), split.folds.end(),
            [](const auto& a, const auto& b) { return a.size() < b.size(); });
        smallest->insert(smallest->end(), members->begin(), members->end());
    }
    for (auto& f : split.folds)
        std::sort(f.begin(), f.end());
    return split;
}

} // namespace dimafx::data
