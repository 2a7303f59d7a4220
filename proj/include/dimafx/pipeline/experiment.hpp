#pragma once

#include <cstdint>
#include <vector>

#include "dimafx/data/cohort.hpp"
#include "dimafx/metrics/dependence.hpp"
#include "dimafx/model/network.hpp"
#include "dimafx/objectives/train.hpp"
#include "dimafx/prototyping/slides.hpp"

namespace dimafx::pipeline {

/// Everything a cross-validated run needs besides the cohort.
struct ExperimentConfig {
    prototyping::SlideOptions prototypes;
    model::ModelConfig model; // prototypes, patch_dim and pathway_sizes are taken from the cohort
    objectives::TrainConfig train;
    std::size_t folds = 5;
    double tau = 120.0;
    std::uint64_t seed = 7;

    void validate() const; // throws ConfigError
};

/// Model config with cohort-derived shapes filled in.
model::ModelConfig resolve_model_config(const ExperimentConfig& config, const data::Cohort& cohort);

model::SampleInput sample_input(const data::CohortSample& sample, const prototyping::PrototypeModel& model);

std::vector<model::SampleInput> build_inputs(const data::Cohort& cohort,
                                             const std::vector<prototyping::PrototypeModel>& models);

/// Risks and pooled stacks of a model over a set of inputs.
struct Predictions {
    std::vector<double> risks;
    Matrix z_gg, z_hh, z_hg, z_gh; // samples x d_z
};

Predictions predict(const model::ModelParams& model, const std::vector<model::SampleInput>& inputs);

struct FoldResult {
    std::size_t fold = 0;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
    Matrix centroids;
    model::ModelParams model;
    std::vector<objectives::HistoryRow> history;
    std::vector<double> test_risks;
    double c_index = 0.0;
    double c_index_ipcw = 0.0;
    metrics::DisentanglementReport disentanglement;
};

/// Prototyping (global k-means on training slides, EM on every slide), training
/// and test evaluation for one fold.
FoldResult run_fold(const data::Cohort& cohort, const data::FoldSplit& split, std::size_t fold,
                    const ExperimentConfig& config);

std::vector<FoldResult> cross_validate(const data::Cohort& cohort, const ExperimentConfig& config);

struct Summary {
    double mean = 0.0;
    double std = 0.0; // sample standard deviation (n - 1); 0 for a single value
};

Summary summarize(const std::vector<double>& values);

/// Seeds of the per-fold stages, derived from the experiment seed.
std::uint64_t split_seed(std::uint64_t seed);
std::uint64_t prototype_seed(std::uint64_t seed, std::size_t fold);
std::uint64_t train_seed(std::uint64_t seed, std::size_t fold);

} // namespace dimafx::pipeline
