#include "litrev/gradcheck.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "litrev/io.hpp"

namespace litrev {

std::vector<EncodedInstance> grad_check_batch(const ModelConfig& config, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    const auto random_ids = [&](std::size_t length) {
        std::vector<int> ids(length);
        for (auto& id : ids) {
            // Content ids only, so every draw is a valid embedding column.
            id = static_cast<int>(Vocabulary::kNumSpecials +
                                  uniform_below(rng, static_cast<std::uint64_t>(
                                                         config.vocab_size -
                                                         static_cast<int>(Vocabulary::kNumSpecials))));
        }
        return ids;
    };

    EncodedInstance instance;
    instance.query_ids = random_ids(4);
    for (int m = 0; m < 2; ++m) {
        std::vector<int> passage = instance.query_ids;
        const auto body = random_ids(5 + m);
        passage.insert(passage.end(), body.begin(), body.end());
        instance.passage_ids.push_back(std::move(passage));
        instance.passage_truncated.push_back(false);
    }
    auto target = random_ids(6);
    target.push_back(Vocabulary::kEos);
    instance.target_ids = std::move(target);
    return {instance};
}

GradCheckReport grad_check_against(const ModelParameters& params,
                                   const std::vector<EncodedInstance>& batch,
                                   const ModelParameters& grads,
                                   const GradCheckOptions& options) {
    ModelParameters probe = params;  // perturbed copy for the finite differences
    auto probe_tensors = probe.tensors();
    const auto grad_tensors = grads.tensors();

    // Group tensor indices by class.
    std::map<std::string, std::vector<std::size_t>> classes;
    for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
        classes[tensor_class_of(probe_tensors[t].name)].push_back(t);
    }

    std::mt19937_64 rng(options.seed ^ 0xd1b54a32d192ed03ULL);
    GradCheckReport report;
    for (const auto& [class_name, tensor_indices] : classes) {
        std::size_t class_size = 0;
        for (const auto t : tensor_indices) class_size += probe_tensors[t].size();
        const std::size_t n_coords = std::min(options.coords_per_class, class_size);
        const auto picks = sample_without_replacement(class_size, n_coords, rng);

        GradCheckClassReport class_report;
        class_report.tensor_class = class_name;
        class_report.coords = n_coords;
        for (const auto pick : picks) {
            // Locate the tensor and offset for this flat coordinate.
            std::size_t remaining = pick;
            std::size_t tensor_idx = 0;
            for (const auto t : tensor_indices) {
                if (remaining < probe_tensors[t].size()) {
                    tensor_idx = t;
                    break;
                }
                remaining -= probe_tensors[t].size();
            }
            double* slot = probe_tensors[tensor_idx].data + remaining;
            const double original = *slot;
            *slot = original + options.epsilon;
            const double loss_plus = loss_only(probe, batch);
            *slot = original - options.epsilon;
            const double loss_minus = loss_only(probe, batch);
            *slot = original;

            const double numeric = (loss_plus - loss_minus) / (2.0 * options.epsilon);
            const double analytic = grad_tensors[tensor_idx].data[remaining];
            const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-2});
            const double rel = std::abs(numeric - analytic) / denom;
            class_report.max_rel_error = std::max(class_report.max_rel_error, rel);
        }
        report.max_rel_error = std::max(report.max_rel_error, class_report.max_rel_error);
        report.classes.push_back(std::move(class_report));
    }
    return report;
}

GradCheckReport grad_check(const GradCheckOptions& options) {
    options.config.validate();
    const auto batch = grad_check_batch(options.config, options.seed);
    const ModelParameters params = ModelParameters::init(options.config, options.seed);
    ModelParameters grads = ModelParameters::zeros_like(params);
    loss_and_gradients(params, batch, grads);
    return grad_check_against(params, batch, grads, options);
}

std::string grad_check_report_text(const GradCheckReport& report) {
    std::ostringstream out;
    out << "tensor_class\tcoords\tmax_rel_error\n";
    for (const auto& c : report.classes) {
        out << c.tensor_class << '\t' << c.coords << '\t' << format_fixed(c.max_rel_error, 9)
            << '\n';
    }
    out << "overall\t-\t" << format_fixed(report.max_rel_error, 9) << '\n';
    return out.str();
}

}  // namespace litrev
