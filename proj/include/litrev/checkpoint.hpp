#pragma once

#include <cstdint>
#include <string>

#include "litrev/model.hpp"
#include "litrev/vocab.hpp"

namespace litrev {

struct Checkpoint {
    ModelParameters params;
    Vocabulary vocab;
    std::string fingerprint;
    std::uint32_t version = 1;
};

/// Self-describing container: magic + version, a JSON header carrying the
/// model config, vocabulary, fingerprint, and tensor directory, then the
/// tensor payload as little-endian doubles in directory order.
void save_checkpoint(const std::string& path, const ModelParameters& params,
                     const Vocabulary& vocab, const std::string& fingerprint);

Checkpoint load_checkpoint(const std::string& path);

std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace litrev
