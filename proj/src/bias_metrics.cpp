#include "seqbias/bias_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "seqbias/error.hpp"
#include "seqbias/rng.hpp"

namespace seqbias {

namespace {

Sequence permuted(const Sequence& x, std::span<const std::size_t> perm) {
    Sequence out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[perm[i]];
    return out;
}

}  // namespace

PrimacyReport compare_distributions(const OutputDistribution& a, const OutputDistribution& b) {
    if (a.size() != b.size()) throw ShapeError("distributions have different vocabulary sizes");
    PrimacyReport r;
    double sum = 0.0;
    for (std::size_t v = 0; v < a.size(); ++v) {
        const double diff = std::abs(a[v] - b[v]);
        sum += diff;
        r.max_abs_diff = std::max(r.max_abs_diff, diff);
    }
    r.mean_abs_diff = a.size() ? sum / double(a.size()) : 0.0;
    r.tv_distance = 0.5 * sum;
    r.num_pairs = 1;
    return r;
}

PrimacyReport primacy_bias(const ToyModel& model, const Sequence& x) {
    if (x.size() < 2) throw InputError("primacy bias needs a sequence of length >= 2");
    Sequence reversed(x.rbegin(), x.rend());
    return compare_distributions(model.predict(x), model.predict(reversed));
}

double order_dependence(const ToyModel& model, const Sequence& x, std::size_t num_permutation_pairs,
                        std::uint64_t seed) {
    if (x.size() < 2) throw InputError("order dependence needs a sequence of length >= 2");
    if (num_permutation_pairs < 1) throw InputError("num_permutation_pairs must be >= 1");
    Rng rng(seed);
    double worst = 0.0;
    for (std::size_t k = 0; k < num_permutation_pairs; ++k) {
        const auto p1 = random_permutation(x.size(), rng);
        const auto p2 = random_permutation(x.size(), rng);
        const Sequence a = permuted(x, p1);
        const Sequence b = permuted(x, p2);
        if (a == b) continue;
        worst = std::max(worst, total_variation(model.predict(a), model.predict(b)));
    }
    return worst;
}

void AnchorProbe::validate(std::size_t vocab_size) const {
    if (anchor_values.empty()) throw InputError("anchor probe has no anchor values");
    if (anchor_slot >= query.size()) throw InputError("anchor slot lies outside the query");
    std::set<Token> seen;
    for (Token a : anchor_values) {
        if (a >= vocab_size) throw InputError("anchor token out of vocabulary");
        if (!seen.insert(a).second) throw InputError("anchor values must be distinct");
    }
    if (!value_map.empty() && value_map.size() != vocab_size)
        throw ShapeError("value_map length must equal vocabulary size");
}

Sequence AnchorProbe::with_anchor(Token anchor) const {
    Sequence s = query;
    s[anchor_slot] = anchor;
    return s;
}

std::vector<double> identity_value_map(std::size_t vocab_size) {
    std::vector<double> m(vocab_size);
    for (std::size_t v = 0; v < vocab_size; ++v) m[v] = double(v);
    return m;
}

double anchoring_slope(const ToyModel& model, const AnchorProbe& probe) {
    probe.validate(model.vocab_size());
    if (probe.anchor_values.size() < 2) throw InputError("anchoring slope needs >= 2 anchors");
    const std::vector<double> value_map =
        probe.value_map.empty() ? identity_value_map(model.vocab_size()) : probe.value_map;

    const std::size_t m = probe.anchor_values.size();
    std::vector<double> xs(m), ys(m);
    for (std::size_t k = 0; k < m; ++k) {
        const Token a = probe.anchor_values[k];
        xs[k] = value_map[a];
        ys[k] = numeric_expectation(model.predict(probe.with_anchor(a)), value_map);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= double(m);
    my /= double(m);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
    }
    if (!(sxx > 0.0)) throw InputError("anchor values map to a single numeric value");
    return sxy / sxx;
}

double entropy(const OutputDistribution& dist) {
    double h = 0.0;
    for (double p : dist.probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

MiEstimate mutual_information(std::span<const OutputDistribution> conditionals) {
    if (conditionals.size() < 2) throw InputError("mutual information needs >= 2 conditionals");
    MiEstimate est;
    est.anchor_count = conditionals.size();
    const std::size_t vocab = conditionals.front().size();
    bool all_identical = true;
    for (const auto& c : conditionals) {
        if (c.size() != vocab) throw ShapeError("conditionals differ in vocabulary size");
        all_identical = all_identical && c == conditionals.front();
    }
    if (all_identical) return est;

    OutputDistribution mixture{std::vector<double>(vocab, 0.0)};
    double mean_entropy = 0.0;
    for (const auto& c : conditionals) {
        for (std::size_t v = 0; v < vocab; ++v) mixture.probs[v] += c[v];
        mean_entropy += entropy(c);
    }
    const double count = double(conditionals.size());
    for (double& p : mixture.probs) p /= count;
    mean_entropy /= count;
    // Jensen guarantees non-negativity; clamp rounding noise.
    est.nats = std::max(0.0, entropy(mixture) - mean_entropy);
    return est;
}

MiEstimate anchor_mutual_information(const ToyModel& model, const AnchorProbe& probe) {
    probe.validate(model.vocab_size());
    if (probe.anchor_values.size() < 2) throw InputError("anchor MI needs >= 2 anchors");
    std::vector<OutputDistribution> conditionals;
    conditionals.reserve(probe.anchor_values.size());
    for (Token a : probe.anchor_values) conditionals.push_back(model.predict(probe.with_anchor(a)));
    return mutual_information(conditionals);
}

double mean_anchor_attention(const ToyModel& model, const AnchorProbe& probe) {
    probe.validate(model.vocab_size());
    const std::size_t last = probe.query.size() - 1;
    double total = 0.0;
    std::size_t count = 0;
    for (Token a : probe.anchor_values) {
        const AttentionTensor att = model.forward(probe.with_anchor(a)).attention;
        for (std::size_t l = 0; l < att.layers(); ++l) {
            total += att(l, last, probe.anchor_slot);
            ++count;
        }
    }
    return total / double(count);
}

double imin_bound(double layers, double mean_anchor_attention, double min_value_entropy) {
    if (layers < 0.0 || mean_anchor_attention < 0.0 || min_value_entropy < 0.0)
        throw InputError("imin_bound inputs must be non-negative");
    return layers * mean_anchor_attention * min_value_entropy;
}

}  // namespace seqbias
