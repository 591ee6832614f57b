#include "seqbias/debias.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seqbias/error.hpp"
#include "seqbias/rng.hpp"

namespace seqbias {

namespace {

// Running mean and variance per vocabulary entry. Identical inputs leave the
// mean bit-identical to the input.
class WelfordAccumulator {
public:
    explicit WelfordAccumulator(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

    void add(std::span<const double> x) {
        ++count_;
        for (std::size_t v = 0; v < mean_.size(); ++v) {
            const double delta = x[v] - mean_[v];
            mean_[v] += delta / double(count_);
            m2_[v] += delta * (x[v] - mean_[v]);
        }
    }
    const std::vector<double>& mean() const { return mean_; }
    double max_std() const {
        double worst = 0.0;
        for (double m2 : m2_) worst = std::max(worst, std::sqrt(std::max(0.0, m2) / double(count_)));
        return worst;
    }

private:
    std::uint64_t count_ = 0;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

Sequence reorder(const Sequence& x, std::span<const std::size_t> perm) {
    Sequence out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[perm[i]];
    return out;
}

}  // namespace

std::uint64_t factorial(std::size_t n) {
    std::uint64_t f = 1;
    for (std::size_t i = 2; i <= n; ++i) f *= i;
    return f;
}

double max_abs_difference(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("vectors differ in length");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

MarginalizedDistribution marginalize_exact(const ToyModel& model, const Sequence& x) {
    const std::size_t n = x.size();
    if (n == 0) throw LengthError("empty sequence");
    if (n > kMaxExactLength)
        throw RefusalError("exact marginalization over n = " + std::to_string(n) + " requires " +
                               std::to_string(factorial(n)) + " forward passes (limit n <= " +
                               std::to_string(kMaxExactLength) + ")",
                           factorial(n));

    WelfordAccumulator acc(model.vocab_size());
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    MarginalizedDistribution out;
    do {
        acc.add(model.predict(reorder(x, perm)).probs);
        ++out.forward_passes;
    } while (std::next_permutation(perm.begin(), perm.end()));

    out.probs = acc.mean();
    out.method = MarginalizationMethod::exact;
    out.permutations = factorial(n);
    out.per_permutation_std = acc.max_std();
    return out;
}

MarginalizedDistribution marginalize_mc(const ToyModel& model, const Sequence& x, std::size_t k,
                                        std::uint64_t seed) {
    if (k < 1) throw InputError("Monte Carlo marginalization needs k >= 1");
    if (x.empty()) throw LengthError("empty sequence");
    Rng rng(seed);
    WelfordAccumulator acc(model.vocab_size());
    MarginalizedDistribution out;
    for (std::size_t s = 0; s < k; ++s) {
        const auto perm = random_permutation(x.size(), rng);
        acc.add(model.predict(reorder(x, perm)).probs);
        ++out.forward_passes;
    }
    out.probs = acc.mean();
    out.method = MarginalizationMethod::monte_carlo;
    out.permutations = k;
    out.seed = seed;
    out.per_permutation_std = acc.max_std();
    return out;
}

ConvergenceCurve mc_convergence(const ToyModel& model, const Sequence& x,
                                std::span<const std::size_t> ks, std::size_t repeats,
                                std::uint64_t seed) {
    if (x.size() > kMaxConvergenceLength)
        throw RefusalError("convergence baseline needs exact marginalization over " +
                               std::to_string(factorial(x.size())) + " permutations (limit n <= " +
                               std::to_string(kMaxConvergenceLength) + ")",
                           factorial(x.size()));
    if (ks.size() < 2) throw InputError("convergence needs at least two k values");
    if (repeats < 10) throw InputError("convergence needs repeats >= 10");
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (ks[i] < 1) throw InputError("k values must be >= 1");
        if (i > 0 && ks[i] <= ks[i - 1]) throw InputError("k values must be strictly increasing");
    }

    const MarginalizedDistribution exact = marginalize_exact(model, x);
    ConvergenceCurve curve;
    curve.c_empirical = exact.per_permutation_std;
    for (std::size_t idx = 0; idx < ks.size(); ++idx) {
        double total = 0.0;
        for (std::size_t r = 0; r < repeats; ++r) {
            const std::uint64_t run_seed = derive_seed(derive_seed(seed, ks[idx]), r);
            const auto mc = marginalize_mc(model, x, ks[idx], run_seed);
            total += max_abs_difference(mc.probs, exact.probs);
        }
        curve.points.push_back({ks[idx], total / double(repeats), repeats});
    }

    for (const auto& p : curve.points)
        if (!(p.mean_residual > 0.0))
            throw DegenerateError("Monte Carlo residual is exactly zero; all orderings coincide");

    // Least-squares slope of ln(residual) on ln(k).
    const double m = double(curve.points.size());
    double mx = 0.0, my = 0.0;
    for (const auto& p : curve.points) {
        mx += std::log(double(p.k));
        my += std::log(p.mean_residual);
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : curve.points) {
        const double dx = std::log(double(p.k)) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(p.mean_residual) - my);
    }
    curve.slope_loglog = sxy / sxx;
    return curve;
}

std::uint64_t samples_for_tolerance(double c, double epsilon) {
    if (!(c > 0.0 && c <= 0.5)) throw InputError("C must lie in (0, 0.5]");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InputError("epsilon must be > 0");
    const double ratio = c / epsilon;
    const double k = ratio * ratio;
    // Decimal inputs such as 0.1 / 0.01 land a few ulps off the integer they
    // denote; snap those before taking the ceiling.
    const double nearest = std::round(k);
    if (std::abs(k - nearest) <= 1e-9 * std::max(1.0, nearest))
        return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(nearest));
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(k)));
}

}  // namespace seqbias
