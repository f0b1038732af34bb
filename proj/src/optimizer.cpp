#include "litrev/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace litrev {

AdamWState AdamWState::init(const ModelParameters& params) {
    return {ModelParameters::zeros_like(params), ModelParameters::zeros_like(params), 0};
}

void adamw_step(ModelParameters& params, const ModelParameters& grads, AdamWState& state,
                const AdamWConfig& config) {
    auto param_tensors = params.tensors();
    const auto grad_tensors = grads.tensors();
    auto m_tensors = state.m.tensors();
    auto v_tensors = state.v.tensors();
    if (param_tensors.size() != grad_tensors.size()) {
        throw std::invalid_argument("adamw_step: gradient shape mismatch");
    }

    ++state.step;
    const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));

    for (std::size_t t = 0; t < param_tensors.size(); ++t) {
        auto& p = param_tensors[t];
        const auto& g = grad_tensors[t];
        if (p.size() != g.size()) {
            throw std::invalid_argument("adamw_step: tensor size mismatch for " + p.name);
        }
        double* m = m_tensors[t].data;
        double* v = v_tensors[t].data;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double grad = g.data[i];
            if (!std::isfinite(grad)) {
                throw std::runtime_error("non-finite gradient in tensor: " + p.name);
            }
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad;
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad * grad;
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            const double prev = p.data[i];
            p.data[i] = prev - config.learning_rate * m_hat / (std::sqrt(v_hat) + config.eps) -
                        config.learning_rate * config.weight_decay * prev;
        }
    }
}

}  // namespace litrev
