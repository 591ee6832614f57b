#include "seqbias/toy_transformer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "seqbias/error.hpp"
#include "seqbias/rng.hpp"

namespace seqbias {

namespace {

constexpr double kLayerNormEps = 1e-5;

// Parameter stream ids for the counter-based initializer.
enum Stream : std::uint64_t {
    kTokenEmbedding = 1,
    kPositionEmbedding = 2,
    kUnembedding = 3,
    kLayerBase = 16,  // layer l uses kLayerBase + 8*l + slot
};

std::vector<double> init_normal(const CounterRng& rng, std::uint64_t stream, std::size_t count,
                                double std) {
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = std * rng.normal(stream, k);
    return out;
}

// out (rows x cols) = in (rows x inner) * w (inner x cols)
void matmul(std::span<const double> in, std::span<const double> w, std::size_t rows,
            std::size_t inner, std::size_t cols, std::vector<double>& out) {
    out.assign(rows * cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double* dst = out.data() + r * cols;
        for (std::size_t k = 0; k < inner; ++k) {
            const double a = in[r * inner + k];
            const double* src = w.data() + k * cols;
            for (std::size_t c = 0; c < cols; ++c) dst[c] += a * src[c];
        }
    }
}

void layer_norm(std::span<const double> in, std::size_t rows, std::size_t dim,
                std::vector<double>& out) {
    out.resize(rows * dim);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = in.data() + r * dim;
        double mean = 0.0;
        for (std::size_t c = 0; c < dim; ++c) mean += x[c];
        mean /= double(dim);
        double var = 0.0;
        for (std::size_t c = 0; c < dim; ++c) var += (x[c] - mean) * (x[c] - mean);
        var /= double(dim);
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        for (std::size_t c = 0; c < dim; ++c) out[r * dim + c] = (x[c] - mean) * inv;
    }
}

double gelu(double x) {
    constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
    return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
}

}  // namespace

std::string mask_kind_name(MaskKind kind) {
    switch (kind) {
        case MaskKind::causal: return "causal";
        case MaskKind::windowed: return "windowed";
        case MaskKind::bidirectional: return "bidirectional";
    }
    return "unknown";
}

MaskKind parse_mask_kind(const std::string& name) {
    if (name == "causal") return MaskKind::causal;
    if (name == "windowed") return MaskKind::windowed;
    if (name == "bidirectional") return MaskKind::bidirectional;
    throw ConfigError("mask_kind", "unknown mask '" + name + "'");
}

void ToyModelConfig::validate() const {
    if (layers < 1) throw ConfigError("layers", "must be >= 1");
    if (heads < 1) throw ConfigError("heads", "must be >= 1");
    if (vocab_size < 2) throw ConfigError("vocab_size", "must be >= 2");
    if (model_dim < 1) throw ConfigError("model_dim", "must be >= 1");
    if (model_dim % heads != 0) throw ConfigError("heads", "must divide model_dim");
    if (max_seq < 2) throw ConfigError("max_seq", "must be >= 2");
    if (!(qk_scale >= 0.0) || !std::isfinite(qk_scale))
        throw ConfigError("qk_scale", "must be finite and >= 0");
    if (mask.kind == MaskKind::windowed && (mask.window < 1 || mask.window > max_seq))
        throw ConfigError("window", "must satisfy 1 <= w <= max_seq");
}

double AttentionTensor::max_row_sum_error() const noexcept {
    double worst = 0.0;
    for (std::size_t l = 0; l < layers_; ++l)
        for (std::size_t i = 0; i < seq_len_; ++i) {
            double s = 0.0;
            for (double w : row(l, i)) s += w;
            worst = std::max(worst, std::abs(s - 1.0));
        }
    return worst;
}

bool AttentionTensor::respects(const AttentionMask& mask) const noexcept {
    for (std::size_t l = 0; l < layers_; ++l)
        for (std::size_t i = 0; i < seq_len_; ++i)
            for (std::size_t j = 0; j < seq_len_; ++j) {
                const double w = (*this)(l, i, j);
                if (w < 0.0) return false;
                if (!mask.allows(i, j) && w != 0.0) return false;
            }
    return true;
}

AttentionTensor AttentionTensor::uniform(std::size_t layers, std::size_t seq_len,
                                         const AttentionMask& mask) {
    AttentionTensor t(layers, seq_len);
    for (std::size_t l = 0; l < layers; ++l)
        for (std::size_t i = 0; i < seq_len; ++i) {
            std::size_t visible = 0;
            for (std::size_t j = 0; j < seq_len; ++j) visible += mask.allows(i, j) ? 1 : 0;
            for (std::size_t j = 0; j < seq_len; ++j)
                if (mask.allows(i, j)) t.at(l, i, j) = 1.0 / double(visible);
        }
    return t;
}

double total_variation(const OutputDistribution& a, const OutputDistribution& b) {
    if (a.size() != b.size()) throw ShapeError("distributions have different vocabulary sizes");
    double s = 0.0;
    for (std::size_t v = 0; v < a.size(); ++v) s += std::abs(a[v] - b[v]);
    return 0.5 * s;
}

double numeric_expectation(const OutputDistribution& dist, std::span<const double> value_map) {
    if (value_map.size() != dist.size())
        throw ShapeError("value_map has " + std::to_string(value_map.size()) +
                         " entries, vocabulary has " + std::to_string(dist.size()));
    double s = 0.0;
    for (std::size_t v = 0; v < dist.size(); ++v) s += dist[v] * value_map[v];
    return s;
}

ToyModel::ToyModel(ToyModelConfig config) : config_(config) {
    config_.validate();
    const std::size_t d = config_.model_dim;
    ffn_dim_ = 4 * d;
    const double std = 1.0 / std::sqrt(double(d));
    const CounterRng rng{config_.seed};

    token_embedding_ = init_normal(rng, kTokenEmbedding, config_.vocab_size * d, std);
    position_embedding_ = init_normal(rng, kPositionEmbedding, config_.max_seq * d, std);
    unembedding_ = init_normal(rng, kUnembedding, d * config_.vocab_size, std);
    layers_.reserve(config_.layers);
    for (std::size_t l = 0; l < config_.layers; ++l) {
        const std::uint64_t base = kLayerBase + 8 * l;
        Layer layer;
        layer.wq = init_normal(rng, base + 0, d * d, std * config_.qk_scale);
        layer.wk = init_normal(rng, base + 1, d * d, std * config_.qk_scale);
        layer.wv = init_normal(rng, base + 2, d * d, std);
        layer.wo = init_normal(rng, base + 3, d * d, std);
        layer.w1 = init_normal(rng, base + 4, d * ffn_dim_, std);
        layer.b1 = init_normal(rng, base + 5, ffn_dim_, std);
        layer.w2 = init_normal(rng, base + 6, ffn_dim_ * d, 1.0 / std::sqrt(double(ffn_dim_)));
        layers_.push_back(std::move(layer));
    }
}

ToyModel ToyModel::with_tied_embeddings(Token source, Token target) const {
    if (source >= config_.vocab_size || target >= config_.vocab_size)
        throw InputError("token id out of vocabulary");
    ToyModel copy = *this;
    const std::size_t d = config_.model_dim;
    std::copy_n(token_embedding_.begin() + source * d, d, copy.token_embedding_.begin() + target * d);
    return copy;
}

ForwardResult ToyModel::forward(std::span<const Token> tokens) const {
    const std::size_t n = tokens.size();
    if (n == 0) throw LengthError("empty sequence");
    if (n > config_.max_seq)
        throw LengthError("sequence length " + std::to_string(n) + " exceeds max_seq " +
                          std::to_string(config_.max_seq));
    const std::size_t d = config_.model_dim;
    const std::size_t heads = config_.heads;
    const std::size_t hd = d / heads;
    const double scale = 1.0 / std::sqrt(double(hd));
    const AttentionMask& mask = config_.mask;

    std::vector<double> h(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        if (tokens[i] >= config_.vocab_size)
            throw InputError("token " + std::to_string(tokens[i]) + " out of vocabulary");
        for (std::size_t c = 0; c < d; ++c) {
            double v = token_embedding_[tokens[i] * d + c];
            if (config_.positional_encoding) v += position_embedding_[i * d + c];
            h[i * d + c] = v;
        }
    }

    ForwardResult result;
    result.attention = AttentionTensor(config_.layers, n);
    std::vector<double> x, q, k, v, mixed(n * d), proj, hidden, ff;
    std::vector<double> scores(n);

    for (std::size_t l = 0; l < config_.layers; ++l) {
        const Layer& layer = layers_[l];
        layer_norm(h, n, d, x);
        matmul(x, layer.wq, n, d, d, q);
        matmul(x, layer.wk, n, d, d, k);
        matmul(x, layer.wv, n, d, d, v);
        std::fill(mixed.begin(), mixed.end(), 0.0);

        for (std::size_t head = 0; head < heads; ++head) {
            const std::size_t off = head * hd;
            for (std::size_t i = 0; i < n; ++i) {
                double top = -INFINITY;
                for (std::size_t j = 0; j < n; ++j) {
                    if (!mask.allows(i, j)) continue;
                    double s = 0.0;
                    for (std::size_t c = 0; c < hd; ++c) s += q[i * d + off + c] * k[j * d + off + c];
                    scores[j] = s * scale;
                    top = std::max(top, scores[j]);
                }
                double total = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (!mask.allows(i, j)) continue;
                    scores[j] = std::exp(scores[j] - top);
                    total += scores[j];
                }
                for (std::size_t j = 0; j < n; ++j) {
                    if (!mask.allows(i, j)) continue;
                    const double a = scores[j] / total;
                    result.attention.at(l, i, j) += a / double(heads);
                    for (std::size_t c = 0; c < hd; ++c) mixed[i * d + off + c] += a * v[j * d + off + c];
                }
            }
        }
        matmul(mixed, layer.wo, n, d, d, proj);
        for (std::size_t t = 0; t < n * d; ++t) h[t] += proj[t];

        layer_norm(h, n, d, x);
        matmul(x, layer.w1, n, d, ffn_dim_, hidden);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < ffn_dim_; ++c)
                hidden[i * ffn_dim_ + c] = gelu(hidden[i * ffn_dim_ + c] + layer.b1[c]);
        matmul(hidden, layer.w2, n, ffn_dim_, d, ff);
        for (std::size_t t = 0; t < n * d; ++t) h[t] += ff[t];
    }

    layer_norm(h, n, d, x);
    // Autoregressive masks read the final position; the bidirectional contrast
    // mode pools over positions so that it has no privileged slot.
    std::vector<double> readout(d, 0.0);
    if (mask.is_autoregressive()) {
        std::copy_n(x.begin() + (n - 1) * d, d, readout.begin());
    } else {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < d; ++c) readout[c] += x[i * d + c];
        for (double& r : readout) r /= double(n);
    }

    const std::size_t vocab = config_.vocab_size;
    std::vector<double> logits(vocab, 0.0);
    for (std::size_t c = 0; c < d; ++c)
        for (std::size_t t = 0; t < vocab; ++t) logits[t] += readout[c] * unembedding_[c * vocab + t];
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& z : logits) {
        z = std::exp(z - top);
        total += z;
    }
    for (double& z : logits) z /= total;
    result.output.probs = std::move(logits);
    return result;
}

}  // namespace seqbias
