#include "dimafx/pipeline/experiment.hpp"

#include <cmath>

#include "dimafx/metrics/survival.hpp"
#include "dimafx/numerics/rng.hpp"

namespace dimafx::pipeline {

void ExperimentConfig::validate() const
{
    prototypes.validate();
    train.validate();
    if (folds < 2)
        throw ConfigError("evaluate.folds must be >= 2");
    if (!(tau > 0.0))
        throw ConfigError("evaluate.tau must be positive");
    // Shape-independent model checks; data-dependent sizes are filled in later.
    model::ModelConfig probe = model;
    probe.prototypes = prototypes.components;
    probe.patch_dim = 1;
    probe.pathway_sizes = {1};
    probe.validate();
}

model::ModelConfig resolve_model_config(const ExperimentConfig& config, const data::Cohort& cohort)
{
    model::ModelConfig c = config.model;
    c.prototypes = config.prototypes.components;
    c.patch_dim = cohort.patch_dim();
    c.pathway_sizes = cohort.catalog.gene_set_sizes();
    try {
        c.validate();
    } catch (const NumericalError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

model::SampleInput sample_input(const data::CohortSample& sample, const prototyping::PrototypeModel& model)
{
    return {prototyping::prototype_features(model), sample.pathway_inputs};
}

std::vector<model::SampleInput> build_inputs(const data::Cohort& cohort,
                                             const std::vector<prototyping::PrototypeModel>& models)
{
    if (models.size() != cohort.size())
        throw DataError("build_inputs: one prototype model per slide required");
    std::vector<model::SampleInput> out;
    out.reserve(models.size());
    for (std::size_t i = 0; i < models.size(); ++i)
        out.push_back(sample_input(cohort.samples[i], models[i]));
    return out;
}

Predictions predict(const model::ModelParams& model, const std::vector<model::SampleInput>& inputs)
{
    const Index n = static_cast<Index>(inputs.size());
    const Index dz = model.config.d_z;
    Predictions p{{}, Matrix(n, dz), Matrix(n, dz), Matrix(n, dz), Matrix(n, dz)};
    p.risks.reserve(inputs.size());
    for (Index i = 0; i < n; ++i) {
        const model::RiskOutput out = model::forward(inputs[static_cast<std::size_t>(i)], model);
        p.risks.push_back(out.risk);
        p.z_gg.row(i) = out.bundle.z_gg;
        p.z_hh.row(i) = out.bundle.z_hh;
        p.z_hg.row(i) = out.bundle.z_hg;
        p.z_gh.row(i) = out.bundle.z_gh;
    }
    return p;
}

std::uint64_t split_seed(std::uint64_t seed) { return mix_seed(seed ^ 0x11); }
std::uint64_t prototype_seed(std::uint64_t seed, std::size_t fold) { return mix_seed(mix_seed(seed ^ 0x22) + fold); }
std::uint64_t train_seed(std::uint64_t seed, std::size_t fold) { return mix_seed(mix_seed(seed ^ 0x33) + fold); }

FoldResult run_fold(const data::Cohort& cohort, const data::FoldSplit& split, std::size_t fold,
                    const ExperimentConfig& config)
{
    config.validate();
    FoldResult r;
    r.fold = fold;
    r.train_indices = split.train_indices(fold);
    r.test_indices = split.test_indices(fold);

    r.centroids = prototyping::global_centroids(cohort, r.train_indices, config.prototypes,
                                                prototype_seed(config.seed, fold));
    const auto models = prototyping::fit_slides(cohort, r.centroids, config.prototypes);
    const auto inputs = build_inputs(cohort, models);

    objectives::TrainingSet train_set;
    for (std::size_t i : r.train_indices) {
        train_set.inputs.push_back(inputs[i]);
        train_set.times.push_back(cohort.samples[i].time);
        train_set.events.push_back(cohort.samples[i].event);
    }
    objectives::TrainConfig tc = config.train;
    tc.seed = train_seed(config.seed, fold);
    auto trained = objectives::train(train_set, resolve_model_config(config, cohort), tc);
    r.model = std::move(trained.model);
    r.history = std::move(trained.history);

    std::vector<model::SampleInput> test_inputs;
    std::vector<double> times;
    std::vector<bool> events;
    for (std::size_t i : r.test_indices) {
        test_inputs.push_back(inputs[i]);
        times.push_back(cohort.samples[i].time);
        events.push_back(cohort.samples[i].event);
    }
    const Predictions p = predict(r.model, test_inputs);
    r.test_risks = p.risks;
    r.c_index = metrics::concordance_index(p.risks, times, events);
    r.c_index_ipcw = metrics::concordance_index_ipcw(p.risks, times, events, config.tau);
    r.disentanglement = metrics::disentanglement_report(p.z_gg, p.z_hh, p.z_hg, p.z_gh);
    return r;
}

std::vector<FoldResult> cross_validate(const data::Cohort& cohort, const ExperimentConfig& config)
{
    config.validate();
    if (cohort.event_count() == 0)
        throw DataError("cohort has no events");
    const data::FoldSplit split = data::split_stratified(cohort, config.folds, split_seed(config.seed));
    std::vector<FoldResult> out;
    for (std::size_t f = 0; f < split.fold_count(); ++f)
        out.push_back(run_fold(cohort, split, f, config));
    return out;
}

Summary summarize(const std::vector<double>& values)
{
    if (values.empty())
        return {};
    double mean = 0.0;
    for (double v : values)
        mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values)
        ss += (v - mean) * (v - mean);
    const double sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
    return {mean, sd};
}

} // namespace dimafx::pipeline
