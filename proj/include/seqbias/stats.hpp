#pragma once

#include <span>
#include <vector>

namespace seqbias::stats {

double mean(std::span<const double> xs);
// Sample variance with the n - 1 denominator.
double sample_variance(std::span<const double> xs);
inline double sample_sd(std::span<const double> xs);

// Pearson correlation; NaN when either variable has zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Linear-interpolation quantile of unsorted data (Hyndman-Fan type 7).
double quantile(std::vector<double> xs, double q);

}  // namespace seqbias::stats

#include <cmath>

inline double seqbias::stats::sample_sd(std::span<const double> xs) {
    return std::sqrt(sample_variance(xs));
}
