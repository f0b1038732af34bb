#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "litrev/model.hpp"

namespace litrev {

struct GradCheckOptions {
    ModelConfig config;
    std::uint64_t seed = 0;
    std::size_t coords_per_class = 200;
    double epsilon = 1e-4;
};

struct GradCheckClassReport {
    std::string tensor_class;
    std::size_t coords = 0;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckClassReport> classes;
    double max_rel_error = 0.0;
};

/// Central finite differences against the analytic gradients of a fresh
/// seeded model on a small random batch. Relative error uses a floored
/// denominator max(|analytic|, |numeric|, 1e-2) so sub-roundoff gradients do
/// not register as failures while genuinely wrong paths still do.
GradCheckReport grad_check(const GradCheckOptions& options);

/// Compares caller-provided gradients against finite differences of the same
/// batch; lets tests verify that corrupted gradients are detected.
GradCheckReport grad_check_against(const ModelParameters& params,
                                   const std::vector<EncodedInstance>& batch,
                                   const ModelParameters& grads, const GradCheckOptions& options);

/// The deterministic fixture batch used by grad_check for a given config/seed.
std::vector<EncodedInstance> grad_check_batch(const ModelConfig& config, std::uint64_t seed);

std::string grad_check_report_text(const GradCheckReport& report);

}  // namespace litrev
