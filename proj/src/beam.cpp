#include "litrev/beam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace litrev {

namespace {

struct Hypothesis {
    std::vector<int> tokens;
    double logprob_sum = 0.0;
};

double normalized_score(const Hypothesis& h, double alpha) {
    const auto length = static_cast<double>(std::max<std::size_t>(h.tokens.size(), 1));
    return h.logprob_sum / std::pow(length, alpha);
}

bool better(const Hypothesis& a, const Hypothesis& b, double alpha) {
    const double sa = normalized_score(a, alpha);
    const double sb = normalized_score(b, alpha);
    if (sa != sb) return sa > sb;
    return a.tokens < b.tokens;
}

}  // namespace

GeneratedChapter generate_beam_with_memory(const ModelParameters& params, const Mat& fused,
                                           const Vocabulary& vocab, const BeamConfig& config) {
    if (config.beam_size < 1) throw std::invalid_argument("beam_size must be >= 1");
    const int cap = std::min(config.max_len, params.config.max_target_len - 1);
    if (cap < 1) throw std::invalid_argument("generate: no room for generated tokens");

    const auto beam = static_cast<std::size_t>(config.beam_size);
    std::vector<Hypothesis> alive = {Hypothesis{}};
    std::vector<Hypothesis> finished;

    for (int step = 0; step < cap && !alive.empty(); ++step) {
        std::vector<Hypothesis> candidates;
        candidates.reserve(alive.size() * beam);
        for (const auto& h : alive) {
            const Vec dist = next_token_distribution(params, fused, h.tokens);
            // Per-hypothesis top beam_size extensions cover every candidate
            // that can survive the global cut.
            std::vector<int> order(static_cast<std::size_t>(dist.size()));
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
            const auto take =
                std::min<std::size_t>(beam, static_cast<std::size_t>(dist.size()));
            std::partial_sort(order.begin(), order.begin() + static_cast<long>(take),
                              order.end(), [&dist](int a, int b) {
                                  if (dist(a) != dist(b)) return dist(a) > dist(b);
                                  return a < b;
                              });
            for (std::size_t i = 0; i < take; ++i) {
                Hypothesis next = h;
                next.tokens.push_back(order[i]);
                next.logprob_sum += std::log(std::max(dist(order[i]), 1e-300));
                candidates.push_back(std::move(next));
            }
        }
        std::sort(candidates.begin(), candidates.end(),
                  [&](const Hypothesis& a, const Hypothesis& b) {
                      return better(a, b, config.length_penalty);
                  });
        if (candidates.size() > beam) candidates.resize(beam);

        alive.clear();
        for (auto& candidate : candidates) {
            if (candidate.tokens.back() == Vocabulary::kEos) {
                finished.push_back(std::move(candidate));
            } else {
                alive.push_back(std::move(candidate));
            }
        }
    }
    // Hypotheses that hit the cap compete alongside the eos-terminated ones.
    for (auto& h : alive) finished.push_back(std::move(h));
    if (finished.empty()) throw std::runtime_error("generate: no hypotheses produced");

    const auto best = std::min_element(finished.begin(), finished.end(),
                                       [&](const Hypothesis& a, const Hypothesis& b) {
                                           return better(a, b, config.length_penalty);
                                       });
    GeneratedChapter out;
    out.token_ids = best->tokens;
    out.text = vocab.decode(out.token_ids);
    return out;
}

GeneratedChapter generate_beam(const ModelParameters& params, const EncodedInstance& instance,
                               const Vocabulary& vocab, const BeamConfig& config) {
    const FusedMemory memory = prepare_memory(params, instance);
    return generate_beam_with_memory(params, memory.fused, vocab, config);
}

}  // namespace litrev
