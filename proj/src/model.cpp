#include "litrev/model.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace litrev {

namespace {

constexpr double kLayerNormEps = 1e-5;

double gelu(double u) { return 0.5 * u * (1.0 + std::erf(u / std::sqrt(2.0))); }

double gelu_grad(double u) {
    const double cdf = 0.5 * (1.0 + std::erf(u / std::sqrt(2.0)));
    const double pdf = std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI);
    return cdf + u * pdf;
}

void softmax_column_inplace(Eigen::Ref<Vec> column) {
    const double max_value = column.maxCoeff();
    column = (column.array() - max_value).exp();
    column /= column.sum();
}

}  // namespace

std::string to_string(FusionMode mode) { return mode == FusionMode::fid ? "fid" : "qfid"; }

FusionMode fusion_mode_from_string(const std::string& name) {
    if (name == "fid") return FusionMode::fid;
    if (name == "qfid") return FusionMode::qfid;
    throw std::invalid_argument("unknown fusion mode: " + name);
}

void ModelConfig::validate() const {
    if (d_model < 1 || n_heads < 1 || n_enc_layers < 1 || n_dec_layers < 1 || ffn_dim < 1) {
        throw std::invalid_argument("model config: dimensions must be >= 1");
    }
    if (d_model % n_heads != 0) {
        throw std::invalid_argument("model config: d_model must be divisible by n_heads");
    }
    if (vocab_size < static_cast<int>(Vocabulary::kNumSpecials)) {
        throw std::invalid_argument("model config: vocab_size too small");
    }
    if (max_passage_len < 1 || max_target_len < 1) {
        throw std::invalid_argument("model config: lengths must be >= 1");
    }
}

// --- parameters ---

namespace {

void init_normal(Mat& m, std::mt19937_64& rng, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
    }
}

AttentionParams make_attention(int d) {
    AttentionParams p;
    p.wq = Mat::Zero(d, d);
    p.wk = Mat::Zero(d, d);
    p.wv = Mat::Zero(d, d);
    p.wo = Mat::Zero(d, d);
    p.bq = Vec::Zero(d);
    p.bk = Vec::Zero(d);
    p.bv = Vec::Zero(d);
    p.bo = Vec::Zero(d);
    return p;
}

LayerNormParams make_layer_norm(int d, bool unit_gain) {
    LayerNormParams p;
    p.gain = unit_gain ? Vec::Ones(d) : Vec::Zero(d);
    p.bias = Vec::Zero(d);
    return p;
}

FfnParams make_ffn(int d, int ffn) {
    FfnParams p;
    p.w1 = Mat::Zero(ffn, d);
    p.b1 = Vec::Zero(ffn);
    p.w2 = Mat::Zero(d, ffn);
    p.b2 = Vec::Zero(d);
    return p;
}

}  // namespace

ModelParameters ModelParameters::init(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    ModelParameters params;
    params.config = config;
    const int d = config.d_model;
    params.embedding = Mat::Zero(d, config.vocab_size);
    params.enc_pos = Mat::Zero(d, config.max_passage_len);
    params.dec_pos = Mat::Zero(d, config.max_target_len);
    for (int i = 0; i < config.n_enc_layers; ++i) {
        params.enc_layers.push_back({make_layer_norm(d, true), make_attention(d),
                                     make_layer_norm(d, true), make_ffn(d, config.ffn_dim)});
    }
    params.enc_final_ln = make_layer_norm(d, true);
    for (int i = 0; i < config.n_dec_layers; ++i) {
        params.dec_layers.push_back({make_layer_norm(d, true), make_attention(d),
                                     make_layer_norm(d, true), make_attention(d),
                                     make_layer_norm(d, true), make_ffn(d, config.ffn_dim)});
    }
    params.dec_final_ln = make_layer_norm(d, true);
    params.out_proj = Mat::Zero(config.vocab_size, d);
    params.out_bias = Vec::Zero(config.vocab_size);

    std::mt19937_64 rng(seed);
    constexpr double kInitStd = 0.02;
    for (auto& tensor : params.tensors()) {
        // Weight matrices and embeddings get gaussian init; biases and layer
        // norms keep their structured defaults.
        const bool is_matrix = tensor.cols > 1;
        if (!is_matrix) continue;
        Eigen::Map<Mat> view(tensor.data, static_cast<Eigen::Index>(tensor.rows),
                             static_cast<Eigen::Index>(tensor.cols));
        Mat temp(view.rows(), view.cols());
        init_normal(temp, rng, kInitStd);
        view = temp;
    }
    return params;
}

ModelParameters ModelParameters::zeros_like(const ModelParameters& other) {
    ModelParameters params;
    params.config = other.config;
    params.embedding = Mat::Zero(other.embedding.rows(), other.embedding.cols());
    params.enc_pos = Mat::Zero(other.enc_pos.rows(), other.enc_pos.cols());
    params.dec_pos = Mat::Zero(other.dec_pos.rows(), other.dec_pos.cols());
    const int d = other.config.d_model;
    for (std::size_t i = 0; i < other.enc_layers.size(); ++i) {
        params.enc_layers.push_back({make_layer_norm(d, false), make_attention(d),
                                     make_layer_norm(d, false),
                                     make_ffn(d, other.config.ffn_dim)});
    }
    params.enc_final_ln = make_layer_norm(d, false);
    for (std::size_t i = 0; i < other.dec_layers.size(); ++i) {
        params.dec_layers.push_back({make_layer_norm(d, false), make_attention(d),
                                     make_layer_norm(d, false), make_attention(d),
                                     make_layer_norm(d, false),
                                     make_ffn(d, other.config.ffn_dim)});
    }
    params.dec_final_ln = make_layer_norm(d, false);
    params.out_proj = Mat::Zero(other.out_proj.rows(), other.out_proj.cols());
    params.out_bias = Vec::Zero(other.out_bias.size());
    return params;
}

void ModelParameters::set_zero() {
    for (auto& tensor : tensors()) {
        Eigen::Map<Mat>(tensor.data, static_cast<Eigen::Index>(tensor.rows),
                        static_cast<Eigen::Index>(tensor.cols))
            .setZero();
    }
}

namespace {

template <typename Self, typename Ref>
std::vector<Ref> enumerate_tensors(Self& self) {
    std::vector<Ref> out;
    const auto add_mat = [&out](const std::string& name, auto& m) {
        out.push_back({name, m.data(), static_cast<std::size_t>(m.rows()),
                       static_cast<std::size_t>(m.cols())});
    };
    const auto add_vec = [&out](const std::string& name, auto& v) {
        out.push_back({name, v.data(), static_cast<std::size_t>(v.size()), 1});
    };
    const auto add_attention = [&](const std::string& prefix, auto& attn) {
        add_mat(prefix + ".wq", attn.wq);
        add_mat(prefix + ".wk", attn.wk);
        add_mat(prefix + ".wv", attn.wv);
        add_mat(prefix + ".wo", attn.wo);
        add_vec(prefix + ".bq", attn.bq);
        add_vec(prefix + ".bk", attn.bk);
        add_vec(prefix + ".bv", attn.bv);
        add_vec(prefix + ".bo", attn.bo);
    };
    const auto add_layer_norm = [&](const std::string& prefix, auto& ln) {
        add_vec(prefix + ".gain", ln.gain);
        add_vec(prefix + ".bias", ln.bias);
    };
    const auto add_ffn = [&](const std::string& prefix, auto& ffn) {
        add_mat(prefix + ".w1", ffn.w1);
        add_vec(prefix + ".b1", ffn.b1);
        add_mat(prefix + ".w2", ffn.w2);
        add_vec(prefix + ".b2", ffn.b2);
    };

    add_mat("embedding", self.embedding);
    add_mat("enc_pos", self.enc_pos);
    add_mat("dec_pos", self.dec_pos);
    for (std::size_t i = 0; i < self.enc_layers.size(); ++i) {
        const std::string prefix = "enc." + std::to_string(i);
        add_layer_norm(prefix + ".ln1", self.enc_layers[i].ln1);
        add_attention(prefix + ".attn", self.enc_layers[i].attn);
        add_layer_norm(prefix + ".ln2", self.enc_layers[i].ln2);
        add_ffn(prefix + ".ffn", self.enc_layers[i].ffn);
    }
    add_layer_norm("enc_final_ln", self.enc_final_ln);
    for (std::size_t i = 0; i < self.dec_layers.size(); ++i) {
        const std::string prefix = "dec." + std::to_string(i);
        add_layer_norm(prefix + ".ln1", self.dec_layers[i].ln1);
        add_attention(prefix + ".self_attn", self.dec_layers[i].self_attn);
        add_layer_norm(prefix + ".ln2", self.dec_layers[i].ln2);
        add_attention(prefix + ".cross_attn", self.dec_layers[i].cross_attn);
        add_layer_norm(prefix + ".ln3", self.dec_layers[i].ln3);
        add_ffn(prefix + ".ffn", self.dec_layers[i].ffn);
    }
    add_layer_norm("dec_final_ln", self.dec_final_ln);
    add_mat("out_proj.w", self.out_proj);
    add_vec("out_proj.b", self.out_bias);
    return out;
}

}  // namespace

std::vector<TensorRef> ModelParameters::tensors() {
    return enumerate_tensors<ModelParameters, TensorRef>(*this);
}

std::vector<ConstTensorRef> ModelParameters::tensors() const {
    return enumerate_tensors<const ModelParameters, ConstTensorRef>(*this);
}

std::string tensor_class_of(const std::string& name) {
    const auto leaf = name.substr(name.rfind('.') + 1);
    if (name == "embedding") return "embedding";
    if (name == "enc_pos" || name == "dec_pos") return "positional";
    if (name.rfind("out_proj", 0) == 0) return "output_projection";
    if (name.find("ln") != std::string::npos || name.find("final_ln") != std::string::npos) {
        return "layer_norm";
    }
    if (name.find("attn") != std::string::npos) {
        return leaf[0] == 'w' ? "attention_weight" : "attention_bias";
    }
    if (name.find("ffn") != std::string::npos) {
        return leaf[0] == 'w' ? "ffn_weight" : "ffn_bias";
    }
    return "other";
}

// --- forward/backward building blocks ---

namespace {

struct LayerNormCache {
    Mat normalized;  // x_hat
    Vec inv_std;     // per column
};

Mat layer_norm_forward(const LayerNormParams& p, const Mat& x, LayerNormCache& cache) {
    const auto d = static_cast<double>(x.rows());
    cache.normalized.resize(x.rows(), x.cols());
    cache.inv_std.resize(x.cols());
    Mat out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).mean();
        const double var = (x.col(j).array() - mean).square().sum() / d;
        const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
        cache.inv_std(j) = inv_std;
        cache.normalized.col(j) = (x.col(j).array() - mean) * inv_std;
        out.col(j) = cache.normalized.col(j).cwiseProduct(p.gain) + p.bias;
    }
    return out;
}

Mat layer_norm_backward(const LayerNormParams& p, const LayerNormCache& cache, const Mat& dy,
                        LayerNormParams& grads) {
    const auto d = static_cast<double>(dy.rows());
    grads.gain += (dy.array() * cache.normalized.array()).rowwise().sum().matrix();
    grads.bias += dy.rowwise().sum();
    Mat dx(dy.rows(), dy.cols());
    for (Eigen::Index j = 0; j < dy.cols(); ++j) {
        const Vec dxhat = dy.col(j).cwiseProduct(p.gain);
        const double mean_dxhat = dxhat.mean();
        const double mean_dxhat_xhat =
            dxhat.cwiseProduct(cache.normalized.col(j)).sum() / d;
        dx.col(j) = cache.inv_std(j) *
                    (dxhat.array() - mean_dxhat -
                     cache.normalized.col(j).array() * mean_dxhat_xhat)
                        .matrix();
    }
    return dx;
}

struct AttentionCache {
    Mat xq, xkv;            // layer inputs to the projections
    Mat q, k, v, o;         // d x L
    std::vector<Mat> attn;  // per head, Lk x Lq column-stochastic
};

Mat attention_forward(const AttentionParams& p, const Mat& xq, const Mat& xkv, int n_heads,
                      bool causal, AttentionCache& cache) {
    const Eigen::Index d = xq.rows();
    const Eigen::Index dh = d / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    cache.xq = xq;
    cache.xkv = xkv;
    cache.q.noalias() = p.wq * xq;
    cache.q.colwise() += p.bq;
    cache.k.noalias() = p.wk * xkv;
    cache.k.colwise() += p.bk;
    cache.v.noalias() = p.wv * xkv;
    cache.v.colwise() += p.bv;
    cache.o.resize(d, xq.cols());
    cache.attn.assign(static_cast<std::size_t>(n_heads), Mat());

    for (int h = 0; h < n_heads; ++h) {
        const auto qh = cache.q.middleRows(h * dh, dh);
        const auto kh = cache.k.middleRows(h * dh, dh);
        const auto vh = cache.v.middleRows(h * dh, dh);
        Mat scores = (kh.transpose() * qh) * scale;  // Lk x Lq
        if (causal) {
            for (Eigen::Index j = 0; j < scores.cols(); ++j) {
                for (Eigen::Index i = j + 1; i < scores.rows(); ++i) {
                    scores(i, j) = -std::numeric_limits<double>::infinity();
                }
            }
        }
        for (Eigen::Index j = 0; j < scores.cols(); ++j) {
            softmax_column_inplace(scores.col(j));
        }
        cache.attn[static_cast<std::size_t>(h)] = scores;
        cache.o.middleRows(h * dh, dh).noalias() = vh * scores;
    }
    Mat out;
    out.noalias() = p.wo * cache.o;
    out.colwise() += p.bo;
    return out;
}

// Returns dXq; dXkv is accumulated into the provided matrix because self
// attention feeds both streams from the same normalized input.
Mat attention_backward(const AttentionParams& p, const AttentionCache& cache, const Mat& dout,
                       int n_heads, AttentionParams& grads, Mat& dxkv_accum) {
    const Eigen::Index d = cache.q.rows();
    const Eigen::Index dh = d / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    grads.wo.noalias() += dout * cache.o.transpose();
    grads.bo += dout.rowwise().sum();
    Mat dO;
    dO.noalias() = p.wo.transpose() * dout;

    Mat dQ = Mat::Zero(d, cache.q.cols());
    Mat dK = Mat::Zero(d, cache.k.cols());
    Mat dV = Mat::Zero(d, cache.v.cols());
    for (int h = 0; h < n_heads; ++h) {
        const auto qh = cache.q.middleRows(h * dh, dh);
        const auto kh = cache.k.middleRows(h * dh, dh);
        const auto vh = cache.v.middleRows(h * dh, dh);
        const auto& attn = cache.attn[static_cast<std::size_t>(h)];
        const auto doh = dO.middleRows(h * dh, dh);

        Mat dattn;
        dattn.noalias() = vh.transpose() * doh;  // Lk x Lq
        dV.middleRows(h * dh, dh).noalias() += doh * attn.transpose();

        Mat dscores(attn.rows(), attn.cols());
        for (Eigen::Index j = 0; j < attn.cols(); ++j) {
            const double inner = attn.col(j).dot(dattn.col(j));
            dscores.col(j) =
                attn.col(j).cwiseProduct(dattn.col(j) - Vec::Constant(attn.rows(), inner));
        }
        dQ.middleRows(h * dh, dh).noalias() += (kh * dscores) * scale;
        dK.middleRows(h * dh, dh).noalias() += (qh * dscores.transpose()) * scale;
    }

    grads.wq.noalias() += dQ * cache.xq.transpose();
    grads.bq += dQ.rowwise().sum();
    grads.wk.noalias() += dK * cache.xkv.transpose();
    grads.bk += dK.rowwise().sum();
    grads.wv.noalias() += dV * cache.xkv.transpose();
    grads.bv += dV.rowwise().sum();

    dxkv_accum.noalias() += p.wk.transpose() * dK;
    dxkv_accum.noalias() += p.wv.transpose() * dV;
    Mat dxq;
    dxq.noalias() = p.wq.transpose() * dQ;
    return dxq;
}

struct FfnCache {
    Mat xn, u, g;
};

Mat ffn_forward(const FfnParams& p, const Mat& xn, FfnCache& cache) {
    cache.xn = xn;
    cache.u.noalias() = p.w1 * xn;
    cache.u.colwise() += p.b1;
    cache.g = cache.u.unaryExpr([](double u) { return gelu(u); });
    Mat out;
    out.noalias() = p.w2 * cache.g;
    out.colwise() += p.b2;
    return out;
}

Mat ffn_backward(const FfnParams& p, const FfnCache& cache, const Mat& dout, FfnParams& grads) {
    grads.w2.noalias() += dout * cache.g.transpose();
    grads.b2 += dout.rowwise().sum();
    Mat dg;
    dg.noalias() = p.w2.transpose() * dout;
    const Mat du = dg.cwiseProduct(cache.u.unaryExpr([](double u) { return gelu_grad(u); }));
    grads.w1.noalias() += du * cache.xn.transpose();
    grads.b1 += du.rowwise().sum();
    Mat dxn;
    dxn.noalias() = p.w1.transpose() * du;
    return dxn;
}

struct EncoderLayerCache {
    LayerNormCache ln1;
    AttentionCache attn;
    LayerNormCache ln2;
    FfnCache ffn;
};

Mat encoder_layer_forward(const EncoderLayerParams& p, const Mat& x, int n_heads,
                          EncoderLayerCache& cache) {
    const Mat xn1 = layer_norm_forward(p.ln1, x, cache.ln1);
    const Mat attn_out = attention_forward(p.attn, xn1, xn1, n_heads, false, cache.attn);
    const Mat x2 = x + attn_out;
    const Mat xn2 = layer_norm_forward(p.ln2, x2, cache.ln2);
    return x2 + ffn_forward(p.ffn, xn2, cache.ffn);
}

Mat encoder_layer_backward(const EncoderLayerParams& p, const EncoderLayerCache& cache,
                           const Mat& dx3, int n_heads, EncoderLayerParams& grads) {
    Mat dx2 = dx3;
    const Mat dxn2 = ffn_backward(p.ffn, cache.ffn, dx3, grads.ffn);
    dx2 += layer_norm_backward(p.ln2, cache.ln2, dxn2, grads.ln2);
    Mat dx = dx2;
    Mat dxn1 = Mat::Zero(dx2.rows(), dx2.cols());
    const Mat dxq = attention_backward(p.attn, cache.attn, dx2, n_heads, grads.attn, dxn1);
    dxn1 += dxq;
    dx += layer_norm_backward(p.ln1, cache.ln1, dxn1, grads.ln1);
    return dx;
}

struct EncoderCache {
    std::vector<int> ids;
    std::vector<EncoderLayerCache> layers;
    LayerNormCache final_ln;
    Mat output;  // d x L
    Vec pooled;
};

void encoder_forward(const ModelParameters& params, const std::vector<int>& ids,
                     EncoderCache& cache) {
    const auto length = static_cast<Eigen::Index>(ids.size());
    if (length == 0) throw std::invalid_argument("encoder: empty input");
    if (length > params.enc_pos.cols()) {
        throw std::runtime_error("encoder: sequence exceeds max_passage_len");
    }
    cache.ids = ids;
    Mat x(params.config.d_model, length);
    for (Eigen::Index c = 0; c < length; ++c) {
        x.col(c) = params.embedding.col(ids[static_cast<std::size_t>(c)]) + params.enc_pos.col(c);
    }
    cache.layers.resize(params.enc_layers.size());
    for (std::size_t layer = 0; layer < params.enc_layers.size(); ++layer) {
        x = encoder_layer_forward(params.enc_layers[layer], x, params.config.n_heads,
                                  cache.layers[layer]);
    }
    cache.output = layer_norm_forward(params.enc_final_ln, x, cache.final_ln);
    cache.pooled = cache.output.rowwise().mean();
}

void encoder_backward(const ModelParameters& params, const EncoderCache& cache, const Mat& dH,
                      ModelParameters& grads) {
    Mat dx = layer_norm_backward(params.enc_final_ln, cache.final_ln, dH, grads.enc_final_ln);
    for (std::size_t layer = params.enc_layers.size(); layer-- > 0;) {
        dx = encoder_layer_backward(params.enc_layers[layer], cache.layers[layer], dx,
                                    params.config.n_heads, grads.enc_layers[layer]);
    }
    for (Eigen::Index c = 0; c < dx.cols(); ++c) {
        grads.embedding.col(cache.ids[static_cast<std::size_t>(c)]) += dx.col(c);
        grads.enc_pos.col(c) += dx.col(c);
    }
}

struct DecoderLayerCache {
    LayerNormCache ln1;
    AttentionCache self_attn;
    LayerNormCache ln2;
    AttentionCache cross_attn;
    LayerNormCache ln3;
    FfnCache ffn;
};

Mat decoder_layer_forward(const DecoderLayerParams& p, const Mat& x, const Mat& memory,
                          int n_heads, DecoderLayerCache& cache) {
    const Mat xn1 = layer_norm_forward(p.ln1, x, cache.ln1);
    const Mat self_out = attention_forward(p.self_attn, xn1, xn1, n_heads, true, cache.self_attn);
    const Mat x2 = x + self_out;
    const Mat xn2 = layer_norm_forward(p.ln2, x2, cache.ln2);
    const Mat cross_out =
        attention_forward(p.cross_attn, xn2, memory, n_heads, false, cache.cross_attn);
    const Mat x3 = x2 + cross_out;
    const Mat xn3 = layer_norm_forward(p.ln3, x3, cache.ln3);
    return x3 + ffn_forward(p.ffn, xn3, cache.ffn);
}

Mat decoder_layer_backward(const DecoderLayerParams& p, const DecoderLayerCache& cache,
                           const Mat& dx4, int n_heads, DecoderLayerParams& grads,
                           Mat& dmemory) {
    Mat dx3 = dx4;
    const Mat dxn3 = ffn_backward(p.ffn, cache.ffn, dx4, grads.ffn);
    dx3 += layer_norm_backward(p.ln3, cache.ln3, dxn3, grads.ln3);

    Mat dx2 = dx3;
    const Mat dxn2 = attention_backward(p.cross_attn, cache.cross_attn, dx3, n_heads,
                                        grads.cross_attn, dmemory);
    dx2 += layer_norm_backward(p.ln2, cache.ln2, dxn2, grads.ln2);

    Mat dx = dx2;
    Mat dxn1 = Mat::Zero(dx2.rows(), dx2.cols());
    const Mat dxq =
        attention_backward(p.self_attn, cache.self_attn, dx2, n_heads, grads.self_attn, dxn1);
    dxn1 += dxq;
    dx += layer_norm_backward(p.ln1, cache.ln1, dxn1, grads.ln1);
    return dx;
}

struct DecoderCache {
    std::vector<int> input_ids;
    std::vector<DecoderLayerCache> layers;
    LayerNormCache final_ln;
    Mat output;  // d x T
};

void decoder_forward(const ModelParameters& params, const std::vector<int>& input_ids,
                     const Mat& memory, DecoderCache& cache) {
    const auto length = static_cast<Eigen::Index>(input_ids.size());
    if (length == 0) throw std::invalid_argument("decoder: empty input");
    if (length > params.dec_pos.cols()) {
        throw std::runtime_error("decoder: sequence exceeds max_target_len");
    }
    if (memory.rows() != params.config.d_model) {
        throw std::invalid_argument("decoder: memory dimension mismatch");
    }
    cache.input_ids = input_ids;
    Mat x(params.config.d_model, length);
    for (Eigen::Index c = 0; c < length; ++c) {
        x.col(c) =
            params.embedding.col(input_ids[static_cast<std::size_t>(c)]) + params.dec_pos.col(c);
    }
    cache.layers.resize(params.dec_layers.size());
    for (std::size_t layer = 0; layer < params.dec_layers.size(); ++layer) {
        x = decoder_layer_forward(params.dec_layers[layer], x, memory, params.config.n_heads,
                                  cache.layers[layer]);
    }
    cache.output = layer_norm_forward(params.dec_final_ln, x, cache.final_ln);
}

// Accumulates parameter grads and returns the memory gradient.
Mat decoder_backward(const ModelParameters& params, const DecoderCache& cache, const Mat& dH,
                     Eigen::Index memory_cols, ModelParameters& grads) {
    Mat dmemory = Mat::Zero(params.config.d_model, memory_cols);
    Mat dx = layer_norm_backward(params.dec_final_ln, cache.final_ln, dH, grads.dec_final_ln);
    for (std::size_t layer = params.dec_layers.size(); layer-- > 0;) {
        dx = decoder_layer_backward(params.dec_layers[layer], cache.layers[layer], dx,
                                    params.config.n_heads, grads.dec_layers[layer], dmemory);
    }
    for (Eigen::Index c = 0; c < dx.cols(); ++c) {
        grads.embedding.col(cache.input_ids[static_cast<std::size_t>(c)]) += dx.col(c);
        grads.dec_pos.col(c) += dx.col(c);
    }
    return dmemory;
}

std::vector<int> decoder_input_for(const std::vector<int>& target_ids) {
    std::vector<int> input;
    input.reserve(target_ids.size());
    input.push_back(Vocabulary::kBos);
    input.insert(input.end(), target_ids.begin(), target_ids.end() - 1);
    return input;
}

}  // namespace

// --- public encoding operations ---

SequenceEncoding encode_sequence(const ModelParameters& params, const std::vector<int>& ids) {
    EncoderCache cache;
    encoder_forward(params, ids, cache);
    return {std::move(cache.output), std::move(cache.pooled), false};
}

PassageEncoding encode_passage(const ModelParameters& params, const std::vector<int>& query_ids,
                               const std::vector<int>& body_ids) {
    if (static_cast<int>(query_ids.size()) > params.config.max_passage_len) {
        throw std::runtime_error("encode_passage: query exceeds max_passage_len");
    }
    std::vector<int> ids = query_ids;
    const std::size_t budget =
        static_cast<std::size_t>(params.config.max_passage_len) - query_ids.size();
    const bool truncated = body_ids.size() > budget;
    const std::size_t take = truncated ? budget : body_ids.size();
    ids.insert(ids.end(), body_ids.begin(), body_ids.begin() + static_cast<long>(take));
    auto encoding = encode_sequence(params, ids);
    encoding.truncated = truncated;
    return encoding;
}

QueryEncoding encode_query(const ModelParameters& params, const std::vector<int>& query_ids) {
    if (static_cast<int>(query_ids.size()) > params.config.max_passage_len) {
        throw std::runtime_error("encode_query: query exceeds max_passage_len");
    }
    return encode_sequence(params, query_ids);
}

FusionWeights fusion_weights(const std::vector<Vec>& pooled_passages, const Vec& pooled_query) {
    if (pooled_passages.empty()) {
        throw std::invalid_argument("fusion_weights: need at least one passage");
    }
    std::vector<double> logits;
    logits.reserve(pooled_passages.size());
    for (const auto& pooled : pooled_passages) {
        if (pooled.size() != pooled_query.size()) {
            throw std::invalid_argument("fusion_weights: dimension mismatch");
        }
        const double z = pooled.dot(pooled_query);
        if (!std::isfinite(z)) throw std::runtime_error("nonfinite_similarity");
        logits.push_back(z);
    }
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (const double z : logits) denom += std::exp(z - max_logit);
    FusionWeights weights;
    weights.w.reserve(logits.size());
    for (const double z : logits) {
        weights.w.push_back(1.0 + std::exp(z - max_logit) / denom);
    }
    return weights;
}

Mat build_fused(const std::vector<SequenceEncoding>& encodings,
                const std::optional<FusionWeights>& weights) {
    if (encodings.empty()) throw std::invalid_argument("build_fused: no encodings");
    if (weights.has_value() && weights->w.size() != encodings.size()) {
        throw std::invalid_argument("build_fused: weight count mismatch");
    }
    Eigen::Index total = 0;
    for (const auto& enc : encodings) total += enc.hidden.cols();
    Mat fused(encodings.front().hidden.rows(), total);
    Eigen::Index offset = 0;
    for (std::size_t m = 0; m < encodings.size(); ++m) {
        const double w = weights.has_value() ? weights->w[m] : 1.0;
        fused.middleCols(offset, encodings[m].hidden.cols()) = w * encodings[m].hidden;
        offset += encodings[m].hidden.cols();
    }
    return fused;
}

Vec next_token_distribution(const ModelParameters& params, const Mat& fused,
                            const std::vector<int>& target_prefix) {
    std::vector<int> input;
    input.reserve(target_prefix.size() + 1);
    input.push_back(Vocabulary::kBos);
    input.insert(input.end(), target_prefix.begin(), target_prefix.end());
    DecoderCache cache;
    decoder_forward(params, input, fused, cache);
    Vec logits = params.out_proj * cache.output.col(cache.output.cols() - 1) + params.out_bias;
    softmax_column_inplace(logits);
    return logits;
}

Vec fuse_and_decode(const ModelParameters& params,
                    const std::vector<SequenceEncoding>& encodings,
                    const std::optional<FusionWeights>& weights,
                    const std::vector<int>& target_prefix) {
    if (params.config.mode == FusionMode::qfid && !weights.has_value()) {
        throw std::invalid_argument("fuse_and_decode: qfid mode requires fusion weights");
    }
    if (params.config.mode == FusionMode::fid && weights.has_value()) {
        throw std::invalid_argument("fuse_and_decode: fid mode forbids fusion weights");
    }
    return next_token_distribution(params, build_fused(encodings, weights), target_prefix);
}

// --- input formatting ---

FormattedExample format_input(const ChapterExample& example) {
    FormattedExample formatted;
    formatted.query = example.review_title + " <s> " + example.chapter_title;
    for (const auto& input : example.inputs) {
        formatted.passages.push_back(formatted.query + " <s> " + input.abstract + " <s> " +
                                     input.bib_tag);
    }
    return formatted;
}

std::string joined_input(const FormattedExample& formatted) {
    std::string joined;
    for (const auto& passage : formatted.passages) {
        if (!joined.empty()) joined += " </s> ";
        joined += passage;
    }
    return joined;
}

EncodedInstance encode_instance(const ChapterExample& example, const Vocabulary& vocab,
                                const ModelConfig& config) {
    const FormattedExample formatted = format_input(example);
    EncodedInstance instance;
    instance.query_ids = vocab.encode(formatted.query);
    if (static_cast<int>(instance.query_ids.size()) > config.max_passage_len) {
        throw std::runtime_error("encode_instance: query exceeds max_passage_len");
    }
    for (const auto& passage : formatted.passages) {
        auto ids = vocab.encode(passage);
        const auto limit = static_cast<std::size_t>(config.max_passage_len);
        const bool truncated = ids.size() > limit;
        if (truncated) ids.resize(limit);
        instance.passage_ids.push_back(std::move(ids));
        instance.passage_truncated.push_back(truncated);
    }
    auto target = vocab.encode(example.target);
    const auto target_limit = static_cast<std::size_t>(config.max_target_len) - 1;
    if (target.size() > target_limit) target.resize(target_limit);
    target.push_back(Vocabulary::kEos);
    instance.target_ids = std::move(target);
    return instance;
}

FusedMemory prepare_memory(const ModelParameters& params, const EncodedInstance& instance) {
    if (instance.passage_ids.empty()) {
        throw std::invalid_argument("prepare_memory: instance has no passages");
    }
    std::vector<SequenceEncoding> encodings;
    encodings.reserve(instance.passage_ids.size());
    for (const auto& ids : instance.passage_ids) {
        encodings.push_back(encode_sequence(params, ids));
    }
    FusedMemory memory;
    memory.truncated = instance.passage_truncated;
    if (params.config.mode == FusionMode::qfid) {
        const auto query_encoding = encode_sequence(params, instance.query_ids);
        std::vector<Vec> pooled;
        pooled.reserve(encodings.size());
        for (const auto& enc : encodings) pooled.push_back(enc.pooled);
        memory.weights = fusion_weights(pooled, query_encoding.pooled);
    }
    memory.fused = build_fused(encodings, memory.weights);
    return memory;
}

// --- loss ---

namespace {

struct InstanceForward {
    std::vector<EncoderCache> passages;
    EncoderCache query;     // qfid only
    bool has_query = false;
    FusionWeights weights;  // qfid only
    Mat fused;
    DecoderCache decoder;
    Mat probs;  // vocab x T softmax probabilities
    double ce_sum = 0.0;
};

double forward_instance(const ModelParameters& params, const EncodedInstance& instance,
                        InstanceForward& fwd) {
    if (instance.target_ids.empty()) throw std::runtime_error("loss: empty target");
    if (instance.passage_ids.empty()) throw std::runtime_error("loss: instance has no passages");

    fwd.passages.resize(instance.passage_ids.size());
    for (std::size_t m = 0; m < instance.passage_ids.size(); ++m) {
        encoder_forward(params, instance.passage_ids[m], fwd.passages[m]);
    }

    std::optional<FusionWeights> weights;
    if (params.config.mode == FusionMode::qfid) {
        fwd.has_query = true;
        encoder_forward(params, instance.query_ids, fwd.query);
        std::vector<Vec> pooled;
        pooled.reserve(fwd.passages.size());
        for (const auto& enc : fwd.passages) pooled.push_back(enc.pooled);
        fwd.weights = fusion_weights(pooled, fwd.query.pooled);
        weights = fwd.weights;
    }

    Eigen::Index total = 0;
    for (const auto& enc : fwd.passages) total += enc.output.cols();
    fwd.fused.resize(params.config.d_model, total);
    Eigen::Index offset = 0;
    for (std::size_t m = 0; m < fwd.passages.size(); ++m) {
        const double w = fwd.has_query ? fwd.weights.w[m] : 1.0;
        fwd.fused.middleCols(offset, fwd.passages[m].output.cols()) =
            w * fwd.passages[m].output;
        offset += fwd.passages[m].output.cols();
    }

    decoder_forward(params, decoder_input_for(instance.target_ids), fwd.fused, fwd.decoder);

    const auto T = static_cast<Eigen::Index>(instance.target_ids.size());
    fwd.probs.resize(params.config.vocab_size, T);
    fwd.ce_sum = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
        Vec logits = params.out_proj * fwd.decoder.output.col(t) + params.out_bias;
        const double max_logit = logits.maxCoeff();
        const double lse = max_logit + std::log((logits.array() - max_logit).exp().sum());
        const int target = instance.target_ids[static_cast<std::size_t>(t)];
        fwd.ce_sum += lse - logits(target);
        fwd.probs.col(t) = (logits.array() - lse).exp();
    }
    return fwd.ce_sum;
}

void backward_instance(const ModelParameters& params, const EncodedInstance& instance,
                       InstanceForward& fwd, double scale, ModelParameters& grads) {
    const auto T = static_cast<Eigen::Index>(instance.target_ids.size());
    Mat dlogits = fwd.probs * scale;
    for (Eigen::Index t = 0; t < T; ++t) {
        dlogits(instance.target_ids[static_cast<std::size_t>(t)], t) -= scale;
    }

    grads.out_proj.noalias() += dlogits * fwd.decoder.output.transpose();
    grads.out_bias += dlogits.rowwise().sum();
    Mat dHd;
    dHd.noalias() = params.out_proj.transpose() * dlogits;

    const Mat dfused = decoder_backward(params, fwd.decoder, dHd, fwd.fused.cols(), grads);

    // Split the fused gradient back into per-passage blocks.
    std::vector<double> dw(fwd.passages.size(), 0.0);
    Eigen::Index offset = 0;
    std::vector<Mat> dH(fwd.passages.size());
    for (std::size_t m = 0; m < fwd.passages.size(); ++m) {
        const auto cols = fwd.passages[m].output.cols();
        const auto block = dfused.middleCols(offset, cols);
        const double w = fwd.has_query ? fwd.weights.w[m] : 1.0;
        dH[m] = w * block;
        if (fwd.has_query) {
            dw[m] = (block.array() * fwd.passages[m].output.array()).sum();
        }
        offset += cols;
    }

    if (fwd.has_query) {
        // w = 1 + softmax(z); propagate through the softmax and the pooled
        // encodings of both the passages and the query.
        const std::size_t n = fwd.passages.size();
        std::vector<double> p(n);
        for (std::size_t m = 0; m < n; ++m) p[m] = fwd.weights.w[m] - 1.0;
        double inner = 0.0;
        for (std::size_t m = 0; m < n; ++m) inner += dw[m] * p[m];
        Vec dh_q = Vec::Zero(params.config.d_model);
        for (std::size_t m = 0; m < n; ++m) {
            const double dz = p[m] * (dw[m] - inner);
            const Vec& h_m = fwd.passages[m].pooled;
            const Vec& h_q = fwd.query.pooled;
            // dz flows into both pooled vectors via z_m = h_m . h_q.
            const auto cols = fwd.passages[m].output.cols();
            dH[m].colwise() += (dz / static_cast<double>(cols)) * h_q;
            dh_q += dz * h_m;
        }
        const Mat dHq =
            (dh_q / static_cast<double>(fwd.query.output.cols()))
                .replicate(1, fwd.query.output.cols());
        encoder_backward(params, fwd.query, dHq, grads);
    }

    for (std::size_t m = 0; m < fwd.passages.size(); ++m) {
        encoder_backward(params, fwd.passages[m], dH[m], grads);
    }
}

}  // namespace

double loss_and_gradients(const ModelParameters& params,
                          const std::vector<EncodedInstance>& batch, ModelParameters& grads) {
    if (batch.empty()) throw std::invalid_argument("loss: empty batch");
    grads.set_zero();
    std::size_t total_tokens = 0;
    for (const auto& instance : batch) {
        if (instance.target_ids.empty()) throw std::runtime_error("loss: empty target");
        total_tokens += instance.target_ids.size();
    }
    const double scale = 1.0 / static_cast<double>(total_tokens);
    double ce_total = 0.0;
    for (const auto& instance : batch) {
        InstanceForward fwd;
        ce_total += forward_instance(params, instance, fwd);
        backward_instance(params, instance, fwd, scale, grads);
    }
    return ce_total * scale;
}

double loss_only(const ModelParameters& params, const std::vector<EncodedInstance>& batch) {
    if (batch.empty()) throw std::invalid_argument("loss: empty batch");
    std::size_t total_tokens = 0;
    for (const auto& instance : batch) {
        if (instance.target_ids.empty()) throw std::runtime_error("loss: empty target");
        total_tokens += instance.target_ids.size();
    }
    double ce_total = 0.0;
    for (const auto& instance : batch) {
        InstanceForward fwd;
        ce_total += forward_instance(params, instance, fwd);
    }
    return ce_total / static_cast<double>(total_tokens);
}

}  // namespace litrev
