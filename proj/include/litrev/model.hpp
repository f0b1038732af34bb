#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "litrev/corpus.hpp"
#include "litrev/vocab.hpp"

namespace litrev {

using Mat = Eigen::MatrixXd;  // columns are sequence positions
using Vec = Eigen::VectorXd;

enum class FusionMode { fid, qfid };

std::string to_string(FusionMode mode);
FusionMode fusion_mode_from_string(const std::string& name);

struct ModelConfig {
    int d_model = 64;
    int n_heads = 4;
    int n_enc_layers = 2;
    int n_dec_layers = 2;
    int ffn_dim = 128;
    int vocab_size = 512;
    int max_passage_len = 512;
    int max_target_len = 256;
    FusionMode mode = FusionMode::qfid;

    void validate() const;  // d_model divisible by n_heads, lengths >= 1
};

struct AttentionParams {
    Mat wq, wk, wv, wo;  // d x d
    Vec bq, bk, bv, bo;  // d
};

struct LayerNormParams {
    Vec gain, bias;  // d
};

struct FfnParams {
    Mat w1;  // ffn x d
    Vec b1;  // ffn
    Mat w2;  // d x ffn
    Vec b2;  // d
};

struct EncoderLayerParams {
    LayerNormParams ln1;
    AttentionParams attn;
    LayerNormParams ln2;
    FfnParams ffn;
};

struct DecoderLayerParams {
    LayerNormParams ln1;
    AttentionParams self_attn;
    LayerNormParams ln2;
    AttentionParams cross_attn;
    LayerNormParams ln3;
    FfnParams ffn;
};

struct TensorRef {
    std::string name;
    double* data;
    std::size_t rows;
    std::size_t cols;
    std::size_t size() const { return rows * cols; }
};

struct ConstTensorRef {
    std::string name;
    const double* data;
    std::size_t rows;
    std::size_t cols;
    std::size_t size() const { return rows * cols; }
};

/// All trainable tensors. Pre-norm transformer encoder-decoder with learned
/// positional embeddings and an untied output projection.
struct ModelParameters {
    ModelConfig config;
    Mat embedding;  // d x vocab
    Mat enc_pos;    // d x max_passage_len
    Mat dec_pos;    // d x max_target_len
    std::vector<EncoderLayerParams> enc_layers;
    LayerNormParams enc_final_ln;
    std::vector<DecoderLayerParams> dec_layers;
    LayerNormParams dec_final_ln;
    Mat out_proj;  // vocab x d
    Vec out_bias;  // vocab

    static ModelParameters init(const ModelConfig& config, std::uint64_t seed);
    static ModelParameters zeros_like(const ModelParameters& other);
    void set_zero();

    std::vector<TensorRef> tensors();
    std::vector<ConstTensorRef> tensors() const;
};

/// Groups tensors for gradient-check reporting: embedding, positional,
/// attention_weight, attention_bias, layer_norm, ffn_weight, ffn_bias,
/// output_projection.
std::string tensor_class_of(const std::string& tensor_name);

/// Hidden states of one encoded sequence plus their column mean.
struct SequenceEncoding {
    Mat hidden;  // d x length
    Vec pooled;  // d, column mean of hidden
    bool truncated = false;
};

using PassageEncoding = SequenceEncoding;
using QueryEncoding = SequenceEncoding;

struct FusionWeights {
    std::vector<double> w;  // each in (1, 2]; sum of (w_m - 1) equals 1
};

/// One model-ready example: the query token ids and each passage's token ids
/// (query prefix included), plus the target ids ending in eos.
struct EncodedInstance {
    std::vector<int> query_ids;
    std::vector<std::vector<int>> passage_ids;
    std::vector<bool> passage_truncated;
    std::vector<int> target_ids;
};

struct FormattedExample {
    std::string query;                  // "review <s> chapter"
    std::vector<std::string> passages;  // "review <s> chapter <s> abstract <s> BIBk"
};

FormattedExample format_input(const ChapterExample& example);

/// Passages joined by "</s>" for single-sequence consumers.
std::string joined_input(const FormattedExample& formatted);

EncodedInstance encode_instance(const ChapterExample& example, const Vocabulary& vocab,
                                const ModelConfig& config);

/// Encoder forward over query + passage body, truncating the body (never the
/// query) to max_passage_len.
PassageEncoding encode_passage(const ModelParameters& params, const std::vector<int>& query_ids,
                               const std::vector<int>& body_ids);

/// Encoder forward over the query alone, sharing encoder parameters.
QueryEncoding encode_query(const ModelParameters& params, const std::vector<int>& query_ids);

/// Encoder forward over an already-assembled token sequence.
SequenceEncoding encode_sequence(const ModelParameters& params, const std::vector<int>& ids);

/// w_m = 1 + softmax_m(h_m . h_q), max-subtracted for stability. Throws
/// "nonfinite_similarity" when a logit is not finite.
FusionWeights fusion_weights(const std::vector<Vec>& pooled_passages, const Vec& pooled_query);

/// Column concatenation [w_1 H_1; ...; w_n H_n]; unit weights when absent.
Mat build_fused(const std::vector<SequenceEncoding>& encodings,
                const std::optional<FusionWeights>& weights);

/// Next-token distribution after teacher-forcing the given target prefix.
/// qfid mode requires fusion weights, fid mode forbids them.
Vec fuse_and_decode(const ModelParameters& params,
                    const std::vector<SequenceEncoding>& encodings,
                    const std::optional<FusionWeights>& weights,
                    const std::vector<int>& target_prefix);

/// Encodes passages (and, in qfid mode, the query) and returns the fused
/// cross-attention memory for decoding.
struct FusedMemory {
    Mat fused;
    std::optional<FusionWeights> weights;
    std::vector<bool> truncated;
};
FusedMemory prepare_memory(const ModelParameters& params, const EncodedInstance& instance);

Vec next_token_distribution(const ModelParameters& params, const Mat& fused,
                            const std::vector<int>& target_prefix);

/// Mean token-level cross-entropy over the batch (teacher forcing). Gradients
/// for every parameter are written into `grads`.
double loss_and_gradients(const ModelParameters& params,
                          const std::vector<EncodedInstance>& batch, ModelParameters& grads);

double loss_only(const ModelParameters& params, const std::vector<EncodedInstance>& batch);

}  // namespace litrev
