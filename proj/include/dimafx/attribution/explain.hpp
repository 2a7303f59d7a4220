#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dimafx/attribution/shapley.hpp"
#include "dimafx/model/network.hpp"

namespace dimafx::attribution {

enum class Mode { unimodal, multimodal };

std::string to_string(Mode mode);

/**
 * Masked features per player. Unimodal players are the N_h prototype tokens
 * followed by the N_g pathway tokens. Multimodal players are the specific
 * tokens of those same features (hh rows, then gg rows) followed by their
 * shared tokens (gh rows, then hg rows).
 */
struct FeatureMask {
    std::vector<bool> masked;

    std::size_t size() const { return masked.size(); }
    static FeatureMask none(std::size_t f) { return {std::vector<bool>(f, false)}; }
    static FeatureMask all(std::size_t f) { return {std::vector<bool>(f, true)}; }
};

/// Mean token rows and pooled vectors over a background set.
struct Background {
    Matrix zh, zg;                     // N_h x d, N_g x d
    Matrix zp_hh, zp_gg, zp_gh, zp_hg; // post-fusion token means
    RowVector z_gg, z_hh, z_hg, z_gh;  // pooled means
};

Background compute_background(const model::ModelParams& model,
                              const std::vector<model::SampleInput>& background);

/// Number of players in a mode.
std::size_t feature_count(const model::ModelConfig& config, Mode mode);

/// Player names: W<k> / R<i> for unimodal, suffixed ":specific" / ":shared" for multimodal.
std::vector<std::string> feature_names(const model::ModelConfig& config, Mode mode);

/// Forward pass with masked players replaced by background means at the mode's layer.
double masked_forward(const model::ModelParams& model, const model::SampleInput& sample,
                      const FeatureMask& mask, const Background& background, Mode mode);

struct AttributionReport {
    std::string sample_id;
    Mode mode = Mode::unimodal;
    std::vector<std::string> features;
    std::vector<double> shap;
    std::vector<double> normalized;
    double base_value = 0.0;
    double prediction = 0.0;
    int permutations = 0;
    double residual = 0.0; // before adjustment
};

AttributionReport unimodal_attribution(const model::ModelParams& model, const model::SampleInput& sample,
                                       const Background& background, int permutations, std::uint64_t seed);

AttributionReport multimodal_attribution(const model::ModelParams& model, const model::SampleInput& sample,
                                         const Background& background, int permutations,
                                         std::uint64_t seed);

/// Shares of the four pooled representations, in risk-head order gg, hh, hg, gh.
struct RepresentationShares {
    double gg = 0.0, hh = 0.0, hg = 0.0, gh = 0.0;
    double specific() const { return gg + hh; }
    double shared() const { return hg + gh; }
};

/// Exact Shapley over the pooled vectors per sample; mean |shap| per stream normalized to sum 1.
RepresentationShares representation_contribution(const model::ModelParams& model,
                                                 const std::vector<model::SampleInput>& samples,
                                                 const Background& background);

struct TopAttended {
    std::vector<Index> index;
    std::vector<double> weight;
};

struct AttentionSummary {
    Matrix a_hh, a_gg, a_gh, a_hg;
    std::vector<TopAttended> top_hh, top_gg, top_gh, top_hg; // per query row
};

/// Element-wise mean attention over samples and the top-k keys per query (lower index on ties).
AttentionSummary attention_summary(const model::ModelParams& model,
                                   const std::vector<model::SampleInput>& samples, Index k);

// Exports.
void write_reports_json(const std::vector<AttributionReport>& reports, const std::filesystem::path& path);
/// sample_id,feature,mode,shap,shap_normalized
void write_reports_csv(const std::vector<AttributionReport>& reports, const std::filesystem::path& path);
/// feature,modality,shap_specific,shap_shared: mean normalized |shap| over multimodal reports.
void write_scatter_csv(const std::vector<AttributionReport>& multimodal, const model::ModelConfig& config,
                       const std::filesystem::path& path);
void write_attention_json(const AttentionSummary& summary, const std::filesystem::path& path);

} // namespace dimafx::attribution
