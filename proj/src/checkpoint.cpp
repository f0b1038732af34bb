#include "litrev/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "litrev/io.hpp"

namespace litrev {

namespace {

constexpr char kMagic[8] = {'L', 'R', 'V', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

nlohmann::json config_json(const ModelConfig& config) {
    return {
        {"d_model", config.d_model},
        {"n_heads", config.n_heads},
        {"n_enc_layers", config.n_enc_layers},
        {"n_dec_layers", config.n_dec_layers},
        {"ffn_dim", config.ffn_dim},
        {"vocab_size", config.vocab_size},
        {"max_passage_len", config.max_passage_len},
        {"max_target_len", config.max_target_len},
        {"mode", to_string(config.mode)},
    };
}

ModelConfig config_from(const nlohmann::json& j) {
    ModelConfig config;
    config.d_model = j.at("d_model").get<int>();
    config.n_heads = j.at("n_heads").get<int>();
    config.n_enc_layers = j.at("n_enc_layers").get<int>();
    config.n_dec_layers = j.at("n_dec_layers").get<int>();
    config.ffn_dim = j.at("ffn_dim").get<int>();
    config.vocab_size = j.at("vocab_size").get<int>();
    config.max_passage_len = j.at("max_passage_len").get<int>();
    config.max_target_len = j.at("max_target_len").get<int>();
    config.mode = fusion_mode_from_string(j.at("mode").get<std::string>());
    config.validate();
    return config;
}

}  // namespace

std::string model_config_to_json(const ModelConfig& config) { return config_json(config).dump(); }

ModelConfig model_config_from_json(const std::string& text) {
    return config_from(nlohmann::json::parse(text));
}

void save_checkpoint(const std::string& path, const ModelParameters& params,
                     const Vocabulary& vocab, const std::string& fingerprint) {
    const auto tensors = params.tensors();
    nlohmann::json directory = nlohmann::json::array();
    for (const auto& tensor : tensors) {
        directory.push_back({{"name", tensor.name}, {"rows", tensor.rows}, {"cols", tensor.cols}});
    }
    const nlohmann::json header = {
        {"config", config_json(params.config)},
        {"vocab", vocab.tokens()},
        {"fingerprint", fingerprint},
        {"tensors", directory},
    };
    const std::string header_text = header.dump();

    std::string blob;
    blob.reserve(sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t) +
                 header_text.size());
    blob.append(kMagic, sizeof(kMagic));
    std::uint32_t version = kVersion;
    blob.append(reinterpret_cast<const char*>(&version), sizeof(version));
    std::uint64_t header_size = header_text.size();
    blob.append(reinterpret_cast<const char*>(&header_size), sizeof(header_size));
    blob += header_text;
    for (const auto& tensor : tensors) {
        blob.append(reinterpret_cast<const char*>(tensor.data), tensor.size() * sizeof(double));
    }
    atomic_write_file(path, blob);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("checkpoint: bad magic in " + path);
    }
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || version != kVersion) {
        throw std::runtime_error("checkpoint: unsupported version");
    }
    std::uint64_t header_size = 0;
    in.read(reinterpret_cast<char*>(&header_size), sizeof(header_size));
    std::string header_text(header_size, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_size));
    if (!in) throw std::runtime_error("checkpoint: truncated header");
    const auto header = nlohmann::json::parse(header_text);

    Checkpoint checkpoint;
    checkpoint.version = version;
    checkpoint.fingerprint = header.value("fingerprint", std::string());
    const ModelConfig config = config_from(header.at("config"));
    checkpoint.vocab = Vocabulary::from_tokens(header.at("vocab").get<std::vector<std::string>>());
    checkpoint.params = ModelParameters::init(config, 0);

    auto tensors = checkpoint.params.tensors();
    const auto& directory = header.at("tensors");
    if (directory.size() != tensors.size()) {
        throw std::runtime_error("checkpoint: tensor directory mismatch");
    }
    for (std::size_t t = 0; t < tensors.size(); ++t) {
        const auto& entry = directory[t];
        if (entry.at("name").get<std::string>() != tensors[t].name ||
            entry.at("rows").get<std::size_t>() != tensors[t].rows ||
            entry.at("cols").get<std::size_t>() != tensors[t].cols) {
            throw std::runtime_error("checkpoint: tensor layout mismatch at " + tensors[t].name);
        }
        in.read(reinterpret_cast<char*>(tensors[t].data),
                static_cast<std::streamsize>(tensors[t].size() * sizeof(double)));
        if (!in) throw std::runtime_error("checkpoint: truncated payload at " + tensors[t].name);
    }
    return checkpoint;
}

}  // namespace litrev
