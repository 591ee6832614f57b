#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "seqbias/toy_transformer.hpp"

namespace seqbias {

struct PrimacyReport {
    double mean_abs_diff = 0.0;  // mean over y of |P(y|x) - P(y|x')|
    double max_abs_diff = 0.0;
    double tv_distance = 0.0;
    std::size_t num_pairs = 0;
};

PrimacyReport compare_distributions(const OutputDistribution& a, const OutputDistribution& b);

// Compares the model's output on x against its output on reverse(x).
PrimacyReport primacy_bias(const ToyModel& model, const Sequence& x);

// Max total variation over `num_permutation_pairs` seeded random pairs of
// permutations of x.
double order_dependence(const ToyModel& model, const Sequence& x, std::size_t num_permutation_pairs,
                        std::uint64_t seed);

// A query template with one slot that receives each candidate anchor token.
struct AnchorProbe {
    std::size_t anchor_slot = 0;  // zero-based
    std::vector<Token> anchor_values;
    Sequence query;
    std::vector<double> value_map;  // numeric reading of each output token

    // Throws InputError unless anchors are non-empty, distinct, in-vocabulary
    // and the slot lies inside the query.
    void validate(std::size_t vocab_size) const;
    Sequence with_anchor(Token anchor) const;
};

// Identity value map v -> v.
std::vector<double> identity_value_map(std::size_t vocab_size);

// Least-squares slope of E[y_hat] against value_map[anchor] across the anchors.
double anchoring_slope(const ToyModel& model, const AnchorProbe& probe);

enum class MiMethod { plug_in };

struct MiEstimate {
    double nats = 0.0;
    MiMethod method = MiMethod::plug_in;
    std::size_t anchor_count = 0;
};

// Plug-in I(y_hat; a | q) under a uniform prior on the given conditionals:
// H(mean_a P_a) - mean_a H(P_a).
MiEstimate mutual_information(std::span<const OutputDistribution> conditionals);

MiEstimate anchor_mutual_information(const ToyModel& model, const AnchorProbe& probe);

// Mean over anchors and layers of the final query's attention on the anchor slot.
double mean_anchor_attention(const ToyModel& model, const AnchorProbe& probe);

// L * mean_anchor_attention * min_value_entropy, in nats.
double imin_bound(double layers, double mean_anchor_attention, double min_value_entropy);

double entropy(const OutputDistribution& dist);

}  // namespace seqbias
