#include "seqbias/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "seqbias/error.hpp"

namespace seqbias::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw InputError("mean of an empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / double(xs.size());
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) throw InputError("sample variance needs n >= 2");
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / double(xs.size() - 1);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw ShapeError("pearson: samples differ in length");
    if (xs.size() < 2) throw InputError("pearson needs n >= 2");
    const auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    };
    if (constant(xs) || constant(ys)) return std::numeric_limits<double>::quiet_NaN();
    const double mx = mean(xs);
    const double my = mean(ys);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw InputError("quantile of an empty sample");
    std::sort(xs.begin(), xs.end());
    const double h = (double(xs.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - double(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace seqbias::stats
