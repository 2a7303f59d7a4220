#include "dimafx/objectives/train.hpp"

#include <fstream>
#include <numeric>

#include "dimafx/data/io.hpp"
#include "dimafx/numerics/rng.hpp"

namespace dimafx::objectives {

void TrainConfig::validate() const
{
    if (epochs < 1)
        throw ConfigError("train.epochs must be >= 1");
    if (batch_size < 2)
        throw ConfigError("train.batch_size must be >= 2");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("train.learning_rate must be positive");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
        throw ConfigError("train.weight_decay must be >= 0");
    if (!(weights.surv >= 0.0) || !(weights.dis >= 0.0))
        throw ConfigError("train.lambda_surv and train.lambda_dis must be >= 0");
}

Index batches_per_epoch(Index n, Index batch_size)
{
    return n / batch_size + (n % batch_size >= 2 ? 1 : 0);
}

TrainResult train(const TrainingSet& data, const model::ModelConfig& model_config,
                  const TrainConfig& config)
{
    config.validate();
    model_config.validate();
    const Index n = static_cast<Index>(data.size());
    if (n < 2)
        throw DataError("train: need at least 2 samples");
    if (data.times.size() != data.size() || data.events.size() != data.size())
        throw DataError("train: labels do not match the number of samples");
    if (std::none_of(data.events.begin(), data.events.end(), [](bool e) { return e; }))
        throw DataError("train: cohort has no events");
    for (const auto& in : data.inputs)
        model::validate_input(in, model_config);

    const Rng root(config.seed);
    TrainResult result;
    const std::uint64_t init_seed = root.fork(1).next_u64();
    result.model = {model_config, model::init_params(model_config, init_seed), init_seed};
    Rng shuffler = root.fork(2);

    model::Params& params = result.model.params;
    OptimizerState state = init_optimizer(params);
    const AdamWConfig adam{0.9, 0.999, 1e-8, config.weight_decay};
    const Index per_epoch = batches_per_epoch(n, config.batch_size);
    const std::int64_t total_steps = static_cast<std::int64_t>(per_epoch) * config.epochs;

    std::vector<std::size_t> order(data.size());
    std::int64_t step = 0;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffler.shuffle(order);
        for (Index b = 0; b < per_epoch; ++b) {
            const Index begin = b * config.batch_size;
            const Index end = std::min(n, begin + config.batch_size);
            std::vector<double> times;
            std::vector<bool> events;

            ad::Tape tape;
            const auto vars = model::to_variables(tape, params);
            std::vector<ad::Var> risks, gg, hh, hg, gh;
            for (Index k = begin; k < end; ++k) {
                const std::size_t i = order[static_cast<std::size_t>(k)];
                const auto tr = model::forward_taped(tape, data.inputs[i], vars, model_config);
                risks.push_back(tr.risk);
                gg.push_back(tr.pooled.gg.vector);
                hh.push_back(tr.pooled.hh.vector);
                hg.push_back(tr.pooled.hg.vector);
                gh.push_back(tr.pooled.gh.vector);
                times.push_back(data.times[i]);
                events.push_back(data.events[i]);
            }
            const TapedLoss loss = total_loss(ad::vstack(risks), ad::vstack(gg), ad::vstack(hh),
                                              ad::vstack(hg), ad::vstack(gh), times, events,
                                              config.weights);
            if (!std::isfinite(loss.total.scalar()))
                throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                     " batch " + std::to_string(b));
            tape.backward(loss.total);
            const double lr = cosine_lr(step, total_steps, config.learning_rate);
            adamw_step(params, model::gradients(tape, vars), state, lr, adam);
            result.history.push_back(
                {epoch, static_cast<int>(b), lr, loss.total.scalar(), loss.cox, loss.dis, loss.degenerate});
            ++step;
        }
    }
    model::validate_params(params, model_config);
    return result;
}

void write_history_csv(const std::vector<HistoryRow>& history, const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write history: " + path.string());
    out << "epoch,batch,lr,loss_total,loss_cox,loss_dis\n";
    for (const auto& h : history)
        out << h.epoch << ',' << h.batch << ',' << data::format_double(h.lr) << ','
            << data::format_double(h.total) << ',' << data::format_double(h.cox) << ','
            << data::format_double(h.dis) << '\n';
}

} // namespace dimafx::objectives
