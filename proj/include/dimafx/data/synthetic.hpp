#pragma once

#include <cstdint>

#include "dimafx/data/cohort.hpp"

namespace dimafx::data {

/**
 * Settings for the synthetic bimodal cohort.
 *
 * Each sample carries three independent standard-normal latent blocks:
 * shared (seen by both modalities), image-only and genomic-only. Patch
 * features come from a Gaussian mixture over `morphologies` whose weights are
 * a softmax of a linear map of (shared, image); gene expression is a linear
 * map of (shared, genomic) plus noise, and pathway inputs are the catalog's
 * gene subsets of it. Event times are exponential with log-hazard
 * log(ln2 / baseline_median) + eta, where eta is linear in all three blocks.
 */
struct SyntheticConfig {
    std::size_t samples = 600;
    Index patch_dim = 32;
    std::size_t min_patches = 48;
    std::size_t max_patches = 96;
    std::size_t morphologies = 8;
    double morphology_spread = 1.0; // per-dimension sd of mixture component means
    double patch_noise = 1.0;
    double mixture_sharpness = 1.5;

    std::size_t genes = 400;
    std::size_t pathways = 50;
    std::size_t min_pathway_genes = 8;
    std::size_t max_pathway_genes = 24;
    double gene_noise = 0.5;

    std::size_t shared_dim = 2;
    std::size_t image_dim = 2;
    std::size_t genomic_dim = 2;
    // eta = shared_effect * mean-like sum of shared latents + ... (each block sd = effect)
    double shared_effect = 1.0;
    double image_effect = 0.6;
    double genomic_effect = 0.6;

    std::size_t sites = 10;
    double site_shift = 0.3;

    double censor_rate = 0.3;
    double baseline_median = 24.0; // months
    double followup_cutoff = 120.0;

    /// Throws ConfigError on out-of-range settings.
    void validate() const;
};

/// Preset with a large hazard signal in every latent block.
SyntheticConfig strong_signal_config();

struct LatentFactors {
    Vector shared;
    Vector image;
    Vector genomic;
    double log_hazard = 0.0; // eta, relative to the baseline
};

/// Oracle information kept next to a generated cohort; never given to the trainer.
struct SyntheticGroundTruth {
    std::vector<LatentFactors> samples;
    double censoring_hazard = 0.0; // 0 means no random censoring
};

struct SyntheticCohort {
    Cohort cohort;
    SyntheticGroundTruth truth;
};

SyntheticCohort generate_cohort(const SyntheticConfig& config, std::uint64_t seed);

/// Expected censored fraction for the given event hazards, censoring hazard and cutoff.
double expected_censor_fraction(const std::vector<double>& event_hazards, double censoring_hazard,
                                double cutoff);

} // namespace dimafx::data
