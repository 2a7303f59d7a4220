#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dimafx/data/cohort.hpp"
#include "dimafx/prototyping/gmm.hpp"

namespace dimafx::prototyping {

struct SlideOptions {
    Index components = kDefaultComponents;
    Index kmeans_patches = 160000; // cap on patches pooled for the global k-means
    int kmeans_iters = 100;
    EmOptions em;

    void validate() const; // throws ConfigError
};

/// Patches of the given slides stacked row-wise; a seeded subset without
/// replacement when more than max_patches are available (slide order kept).
Matrix pool_patches(const data::Cohort& cohort, const std::vector<std::size_t>& slides,
                    Index max_patches, std::uint64_t seed);

/// Shared k-means centroids over patches pooled from `slides`.
Matrix global_centroids(const data::Cohort& cohort, const std::vector<std::size_t>& slides,
                        const SlideOptions& options, std::uint64_t seed);

/// Per-slide EM from the shared centroids, for every slide in cohort order.
std::vector<PrototypeModel> fit_slides(const data::Cohort& cohort, const Matrix& centroids,
                                       const SlideOptions& options);

/// JSON document: {components, dim, centroids, slides: [{sample_id, means, variances, weights}]}.
void save_prototypes(const data::Cohort& cohort, const Matrix& centroids,
                     const std::vector<PrototypeModel>& models, const std::filesystem::path& path);

/// CSV: sample_id,prototype,rank,patch_index,responsibility (rank is 1-based).
void save_top_assignments(const data::Cohort& cohort, const std::vector<PrototypeModel>& models,
                          Index m, const std::filesystem::path& path);

} // namespace dimafx::prototyping
