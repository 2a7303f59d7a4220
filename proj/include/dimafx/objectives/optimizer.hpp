#pragma once

#include <cstdint>

#include "dimafx/model/params.hpp"

namespace dimafx::objectives {

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 1e-5;
};

/// Moment accumulators mirroring the parameter layout.
struct OptimizerState {
    model::Params m;
    model::Params v;
    std::int64_t step = 0;
};

OptimizerState init_optimizer(const model::Params& like);

/**
 * One AdamW update with decoupled decay:
 *   p <- p (1 - lr wd);  p <- p - lr m_hat / (sqrt(v_hat) + eps)
 * Throws NumericalError naming the first parameter with a non-finite gradient;
 * params and state are left untouched in that case.
 */
void adamw_step(model::Params& params, const model::Params& grads, OptimizerState& state, double lr,
                const AdamWConfig& config);

/// base_lr (1 + cos(pi step / total_steps)) / 2.
double cosine_lr(std::int64_t step, std::int64_t total_steps, double base_lr);

} // namespace dimafx::objectives
