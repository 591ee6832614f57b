#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "seqbias/toy_transformer.hpp"

namespace seqbias {

enum class MarginalizationMethod { exact, monte_carlo };

struct MarginalizedDistribution {
    std::vector<double> probs;
    MarginalizationMethod method = MarginalizationMethod::exact;
    std::uint64_t permutations = 0;  // n! for exact, k for Monte Carlo
    std::uint64_t seed = 0;          // Monte Carlo only
    // Max over y of the (population) std of P(y | pi(x)) across evaluated
    // permutations. Lies in [0, 1/2] by Popoviciu.
    double per_permutation_std = 0.0;
    std::uint64_t forward_passes = 0;
};

inline constexpr std::size_t kMaxExactLength = 8;

std::uint64_t factorial(std::size_t n);

// Uniform average of the output over all n! orderings of x, enumerated
// lexicographically over positions. Throws RefusalError carrying n! when
// n > kMaxExactLength.
MarginalizedDistribution marginalize_exact(const ToyModel& model, const Sequence& x);

// Mean output over k uniform permutations drawn with replacement.
MarginalizedDistribution marginalize_mc(const ToyModel& model, const Sequence& x, std::size_t k,
                                        std::uint64_t seed);

struct ConvergencePoint {
    std::size_t k = 0;
    double mean_residual = 0.0;  // mean over repeats of max_y |mc - exact|
    std::size_t repeats = 0;
};

struct ConvergenceCurve {
    std::vector<ConvergencePoint> points;
    double slope_loglog = 0.0;
    double c_empirical = 0.0;
};

inline constexpr std::size_t kMaxConvergenceLength = 7;

// Monte Carlo residual against the exact average for each k. ks must be
// strictly increasing with at least two entries; repeats >= 10.
ConvergenceCurve mc_convergence(const ToyModel& model, const Sequence& x,
                                std::span<const std::size_t> ks, std::size_t repeats,
                                std::uint64_t seed);

// Smallest k with C^2 / k <= epsilon^2, i.e. ceil(C^2 / epsilon^2).
std::uint64_t samples_for_tolerance(double c, double epsilon);

double max_abs_difference(std::span<const double> a, std::span<const double> b);

}  // namespace seqbias
