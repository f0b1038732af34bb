#pragma once

#include <string>
#include <vector>

#include "litrev/model.hpp"
#include "litrev/vocab.hpp"

namespace litrev {

struct BeamConfig {
    int beam_size = 4;
    int max_len = 256;  // clamped to max_target_len - 1
    double length_penalty = 1.0;
};

struct GeneratedChapter {
    std::vector<int> token_ids;  // without bos; ends at eos or the cap
    std::string text;
};

/// Beam search over next-token distributions; hypotheses are scored by the
/// sum of log-probabilities divided by length^alpha. Ties prefer the
/// lexicographically smaller token sequence. beam_size=1 is greedy decoding.
GeneratedChapter generate_beam(const ModelParameters& params, const EncodedInstance& instance,
                               const Vocabulary& vocab, const BeamConfig& config);

/// Decoding reuses a prepared memory when scoring many prefixes.
GeneratedChapter generate_beam_with_memory(const ModelParameters& params, const Mat& fused,
                                           const Vocabulary& vocab, const BeamConfig& config);

}  // namespace litrev
