#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace seqbias {

using Token = std::uint32_t;
using Sequence = std::vector<Token>;

enum class MaskKind { causal, windowed, bidirectional };

struct AttentionMask {
    MaskKind kind = MaskKind::causal;
    std::size_t window = 0;  // only meaningful for windowed

    static AttentionMask causal() { return {MaskKind::causal, 0}; }
    static AttentionMask windowed(std::size_t w) { return {MaskKind::windowed, w}; }
    static AttentionMask bidirectional() { return {MaskKind::bidirectional, 0}; }

    // Zero-based query i may attend to key j.
    bool allows(std::size_t i, std::size_t j) const noexcept {
        switch (kind) {
            case MaskKind::causal: return j <= i;
            case MaskKind::windowed: return j <= i && j + window > i;
            case MaskKind::bidirectional: return true;
        }
        return false;
    }
    // Causal and windowed masks never let a query see a later key.
    bool is_autoregressive() const noexcept { return kind != MaskKind::bidirectional; }

    friend bool operator==(const AttentionMask&, const AttentionMask&) = default;
};

std::string mask_kind_name(MaskKind kind);
MaskKind parse_mask_kind(const std::string& name);

struct ToyModelConfig {
    std::size_t layers = 2;
    std::size_t heads = 2;
    std::size_t vocab_size = 16;
    std::size_t model_dim = 16;
    std::size_t max_seq = 8;
    AttentionMask mask = AttentionMask::causal();
    std::uint64_t seed = 0;
    // Learned absolute positional encoding added to token embeddings. Turning
    // it off gives the content-only ablation.
    bool positional_encoding = true;
    // Multiplier on the query/key init std. Below 1 the attention logits start
    // small, so attention is near-uniform but still content and position
    // dependent.
    double qk_scale = 0.25;

    // Throws ConfigError naming the first invalid field.
    void validate() const;

    friend bool operator==(const ToyModelConfig&, const ToyModelConfig&) = default;
};

// Per-layer head-averaged attention weights, indexed (layer, query, key) with
// zero-based positions.
class AttentionTensor {
public:
    AttentionTensor() = default;
    AttentionTensor(std::size_t layers, std::size_t seq_len)
        : layers_(layers), seq_len_(seq_len), weights_(layers * seq_len * seq_len, 0.0) {}

    std::size_t layers() const noexcept { return layers_; }
    std::size_t seq_len() const noexcept { return seq_len_; }

    double operator()(std::size_t layer, std::size_t query, std::size_t key) const noexcept {
        return weights_[index(layer, query, key)];
    }
    double& at(std::size_t layer, std::size_t query, std::size_t key) noexcept {
        return weights_[index(layer, query, key)];
    }
    std::span<const double> row(std::size_t layer, std::size_t query) const noexcept {
        return {weights_.data() + index(layer, query, 0), seq_len_};
    }

    // Largest |row sum - 1| over all (layer, query) rows.
    double max_row_sum_error() const noexcept;
    // True iff every weight is >= 0 and every masked weight is exactly zero.
    bool respects(const AttentionMask& mask) const noexcept;

    // Tensor whose every row spreads weight uniformly over the keys the mask
    // allows.
    static AttentionTensor uniform(std::size_t layers, std::size_t seq_len,
                                   const AttentionMask& mask = AttentionMask::causal());

private:
    std::size_t index(std::size_t l, std::size_t i, std::size_t j) const noexcept {
        return (l * seq_len_ + i) * seq_len_ + j;
    }

    std::size_t layers_ = 0;
    std::size_t seq_len_ = 0;
    std::vector<double> weights_;
};

struct OutputDistribution {
    std::vector<double> probs;

    std::size_t size() const noexcept { return probs.size(); }
    double operator[](std::size_t v) const noexcept { return probs[v]; }

    friend bool operator==(const OutputDistribution&, const OutputDistribution&) = default;
};

double total_variation(const OutputDistribution& a, const OutputDistribution& b);

// Sum over v of probs[v] * value_map[v].
double numeric_expectation(const OutputDistribution& dist, std::span<const double> value_map);

struct ForwardResult {
    OutputDistribution output;
    AttentionTensor attention;
};

// Small pre-norm transformer with fixed seeded weights. Immutable after
// construction; forward() is const and touches no shared state.
class ToyModel {
public:
    explicit ToyModel(ToyModelConfig config);

    const ToyModelConfig& config() const noexcept { return config_; }
    std::size_t vocab_size() const noexcept { return config_.vocab_size; }

    // Next-token distribution after the final position plus the attention of
    // every layer. Throws LengthError for empty or oversized input and
    // InputError for out-of-vocabulary tokens.
    ForwardResult forward(std::span<const Token> tokens) const;
    OutputDistribution predict(std::span<const Token> tokens) const {
        return forward(tokens).output;
    }

    // Copy whose embedding row for `target` equals that of `source`, making the
    // two tokens indistinguishable on input.
    ToyModel with_tied_embeddings(Token source, Token target) const;

private:
    struct Layer {
        std::vector<double> wq, wk, wv, wo;  // dim x dim
        std::vector<double> w1, b1;          // dim x ffn, ffn
        std::vector<double> w2;              // ffn x dim
    };

    ToyModelConfig config_;
    std::size_t ffn_dim_;
    std::vector<double> token_embedding_;     // vocab x dim
    std::vector<double> position_embedding_;  // max_seq x dim
    std::vector<Layer> layers_;
    std::vector<double> unembedding_;  // dim x vocab
};

inline ToyModel build_model(const ToyModelConfig& config) { return ToyModel(config); }

}  // namespace seqbias
