#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dimafx/model/network.hpp"
#include "dimafx/objectives/loss.hpp"
#include "dimafx/objectives/optimizer.hpp"

namespace dimafx::objectives {

struct TrainConfig {
    int epochs = 30;
    Index batch_size = 64;
    double learning_rate = 1e-4;
    double weight_decay = 1e-5;
    LossWeights weights;
    std::uint64_t seed = 0;

    void validate() const; // throws ConfigError
};

/// Network inputs with survival labels, one entry per sample.
struct TrainingSet {
    std::vector<model::SampleInput> inputs;
    std::vector<double> times;
    std::vector<bool> events;

    std::size_t size() const { return inputs.size(); }
};

struct HistoryRow {
    int epoch = 0; // 1-based
    int batch = 0; // 0-based within the epoch
    double lr = 0.0;
    double total = 0.0;
    double cox = 0.0;
    double dis = 0.0;
    bool degenerate = false; // a representation stack was constant; its DC counted as 0
};

struct TrainResult {
    model::ModelParams model;
    std::vector<HistoryRow> history;
};

/**
 * Mini-batch AdamW with a cosine schedule over all steps. Batches come from a
 * seeded shuffle per epoch; a trailing batch with fewer than two samples is
 * dropped. Initialization and shuffling use streams forked from config.seed.
 * Throws DataError when the set has fewer than two samples or no events.
 */
TrainResult train(const TrainingSet& data, const model::ModelConfig& model_config,
                  const TrainConfig& config);

/// Number of optimizer steps train() takes per epoch for n samples.
Index batches_per_epoch(Index n, Index batch_size);

/// CSV header: epoch,batch,lr,loss_total,loss_cox,loss_dis
void write_history_csv(const std::vector<HistoryRow>& history, const std::filesystem::path& path);

} // namespace dimafx::objectives
