#include "dimafx/objectives/optimizer.hpp"

#include <cmath>
#include <numbers>

namespace dimafx::objectives {

OptimizerState init_optimizer(const model::Params& like)
{
    OptimizerState s{like, like, 0};
    model::visit_params(s.m, [](const std::string&, Matrix& m) { m.setZero(); });
    model::visit_params(s.v, [](const std::string&, Matrix& m) { m.setZero(); });
    return s;
}

void adamw_step(model::Params& params, const model::Params& grads, OptimizerState& state, double lr,
                const AdamWConfig& c)
{
    model::visit_params2(params, grads, [](const std::string& name, const Matrix& p, const Matrix& g) {
        if (p.rows() != g.rows() || p.cols() != g.cols())
            throw NumericalError("adamw: gradient shape mismatch for " + name);
        if (!all_finite(g))
            throw NumericalError("adamw: non-finite gradient in " + name);
    });

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    const double decay = 1.0 - lr * c.weight_decay;

    std::vector<const Matrix*> g_list;
    model::visit_params(grads, [&](const std::string&, const Matrix& g) { g_list.push_back(&g); });
    std::vector<Matrix*> m_list, v_list;
    model::visit_params(state.m, [&](const std::string&, Matrix& m) { m_list.push_back(&m); });
    model::visit_params(state.v, [&](const std::string&, Matrix& v) { v_list.push_back(&v); });

    std::size_t i = 0;
    model::visit_params(params, [&](const std::string&, Matrix& p) {
        const Matrix& g = *g_list[i];
        Matrix& m = *m_list[i];
        Matrix& v = *v_list[i];
        ++i;
        m = c.beta1 * m + (1.0 - c.beta1) * g;
        v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
        p *= decay;
        p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
    });
}

double cosine_lr(std::int64_t step, std::int64_t total_steps, double base_lr)
{
    if (total_steps <= 0 || step < 0 || step > total_steps)
        throw ConfigError("cosine_lr: step out of range");
    const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
    return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

} // namespace dimafx::objectives
