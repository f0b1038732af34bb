#pragma once

#include <cstdint>

#include "litrev/model.hpp"

namespace litrev {

struct AdamWConfig {
    double learning_rate = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 0.01;
    double eps = 1e-8;
};

struct AdamWState {
    ModelParameters m;
    ModelParameters v;
    std::int64_t step = 0;

    static AdamWState init(const ModelParameters& params);
};

/// Decoupled-weight-decay adaptive-moment update with bias correction.
/// Throws, naming the tensor, when a gradient is not finite.
void adamw_step(ModelParameters& params, const ModelParameters& grads, AdamWState& state,
                const AdamWConfig& config);

}  // namespace litrev
