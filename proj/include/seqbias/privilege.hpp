#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "seqbias/toy_transformer.hpp"

namespace seqbias {

enum class PrivilegeSource { empirical, uniform_closed_form };

// Phi(j): total expected attention position j receives from itself and every
// later query, summed over layers. phi[0] is position 1.
struct PrivilegeProfile {
    std::vector<double> phi;
    std::size_t layers = 0;
    std::size_t seq_len = 0;
    PrivilegeSource source = PrivilegeSource::empirical;
    std::size_t num_samples = 0;  // empirical only
};

// k-th harmonic number by direct summation; H_0 = 0.
double harmonic(std::size_t k);

// Sample mean over the tensors of sum_l sum_{i>=j} A[l][i][j]. All tensors
// must share (layers, seq_len).
PrivilegeProfile privilege_from_attention(std::span<const AttentionTensor> tensors);

// Runs the model on every input and averages the resulting privilege. Inputs
// must be non-empty and share one length.
PrivilegeProfile privilege_empirical(const ToyModel& model, std::span<const Sequence> inputs);

// Closed form under uniform causal attention: L * (H_n - H_{j-1}).
PrivilegeProfile privilege_uniform(std::size_t layers, std::size_t seq_len);

// phi(1) - phi(n); requires n >= 2.
double privilege_gap(const PrivilegeProfile& profile);

struct MonotonicityReport {
    bool holds = true;
    std::optional<std::size_t> first_violation;  // 1-based j with phi(j) <= phi(j+1) + tol
};

// Strict decrease check. Closed-form profiles use zero tolerance, empirical
// profiles require each step to exceed 1e-9.
MonotonicityReport check_monotonicity(const PrivilegeProfile& profile);

inline constexpr double kEmpiricalMonotonicityTol = 1e-9;

// Token sequences drawn uniformly from the vocabulary.
std::vector<Sequence> random_sequences(std::size_t count, std::size_t length, std::size_t vocab,
                                       std::uint64_t seed);

}  // namespace seqbias
