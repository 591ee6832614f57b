#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace seqbias {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives an independent seed for a sub-task from a parent seed and a tag.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    return mix64(seed ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

// Counter-based generator: value k of stream s under seed is a pure function
// of (seed, s, k). Used for weight initialization so that every parameter is
// addressable independently of draw order.
struct CounterRng {
    std::uint64_t seed;

    std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const noexcept {
        return mix64(mix64(seed ^ mix64(stream)) + counter);
    }
    double uniform(std::uint64_t stream, std::uint64_t counter) const noexcept;
    // Standard normal via Box-Muller on two counter-addressed uniforms.
    double normal(std::uint64_t stream, std::uint64_t counter) const noexcept;
};

// Sequential generator with platform-independent distributions, so that
// seeded runs are bit-reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next_u64() noexcept {
        const std::uint64_t z = state_;
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(z);
    }
    // Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return double(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n), unbiased (rejection sampling).
    std::uint64_t below(std::uint64_t n) noexcept;
    double normal() noexcept;
    double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

    template <typename T>
    void shuffle(std::span<T> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Identity permutation of size n shuffled by Fisher-Yates.
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace seqbias
