#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dimafx/numerics/tensor.hpp"

namespace dimafx::data {

struct Pathway {
    std::string name;
    std::vector<Index> gene_indices;

    friend bool operator==(const Pathway&, const Pathway&) = default;
};

/// Ordered gene-set catalog; its size is the number of pathway features.
struct PathwayCatalog {
    std::vector<Pathway> entries;

    std::size_t size() const { return entries.size(); }
    std::vector<Index> gene_set_sizes() const;
    /// Throws DataError on empty gene lists, negative indices or duplicate names.
    void validate() const;

    friend bool operator==(const PathwayCatalog&, const PathwayCatalog&) = default;
};

/// One slide. Times are in months; event == true means death observed.
struct CohortSample {
    std::string sample_id;
    std::string site_id;
    Matrix patch_features; // patches x patch_dim
    std::vector<Vector> pathway_inputs;
    double time = 0.0;
    bool event = false;
};

/// Exact equality, including shapes (Eigen's operator== requires equal sizes).
bool operator==(const CohortSample& a, const CohortSample& b);

struct Cohort {
    PathwayCatalog catalog;
    std::vector<CohortSample> samples;

    std::size_t size() const { return samples.size(); }
    Index patch_dim() const;
    std::vector<double> times() const;
    std::vector<bool> events() const;
    std::size_t event_count() const;

    /// Checks every CohortSample invariant against the catalog.
    void validate() const;
};

bool operator==(const Cohort& a, const Cohort& b);

/// Administrative censoring at tau: later times become (tau, censored).
Cohort truncate_followup(Cohort cohort, double tau);

/// Sample indices per fold, each fold sorted ascending.
struct FoldSplit {
    std::vector<std::vector<std::size_t>> folds;

    std::size_t fold_count() const { return folds.size(); }
    const std::vector<std::size_t>& test_indices(std::size_t fold) const { return folds.at(fold); }
    std::vector<std::size_t> train_indices(std::size_t fold) const;
};

/**
 * Site-stratified k-fold split. Whole sites go to one fold: sites are taken
 * largest first (seeded shuffle breaks size ties) and each is assigned to the
 * currently smallest fold, lowest fold index on ties.
 */
FoldSplit split_stratified(const Cohort& cohort, std::size_t k, std::uint64_t seed);

} // namespace dimafx::data
