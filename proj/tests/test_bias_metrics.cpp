#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seqbias/bias_metrics.hpp"
#include "seqbias/error.hpp"
#include "seqbias/rng.hpp"

using namespace seqbias;

namespace {

ToyModel causal_model(std::uint64_t seed, std::size_t max_seq = 8) {
    ToyModelConfig c;
    c.seed = seed;
    c.max_seq = max_seq;
    return ToyModel(c);
}

AnchorProbe probe_for(std::size_t vocab, std::vector<Token> anchors) {
    AnchorProbe p;
    p.anchor_slot = 0;
    p.anchor_values = std::move(anchors);
    p.query = {0, 3, 9, 4, 1};
    p.value_map = identity_value_map(vocab);
    return p;
}

// max TV over every pair of permutations, by brute force
double exhaustive_order_dependence(const ToyModel& m, const Sequence& x) {
    std::vector<OutputDistribution> outs;
    Sequence p = x;
    std::sort(p.begin(), p.end());
    do outs.push_back(m.predict(p));
    while (std::next_permutation(p.begin(), p.end()));
    double best = 0.0;
    for (std::size_t a = 0; a < outs.size(); ++a)
        for (std::size_t b = a + 1; b < outs.size(); ++b) best = std::max(best, total_variation(outs[a], outs[b]));
    return best;
}

}  // namespace

TEST_CASE("palindromes have zero primacy bias") {
    const auto r = primacy_bias(causal_model(1), Sequence{1, 2, 1});
    CHECK(r.mean_abs_diff == 0.0);
    CHECK(r.max_abs_diff == 0.0);
    CHECK(r.tv_distance == 0.0);
}

TEST_CASE("primacy report bounds") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto r = primacy_bias(causal_model(s), Sequence{0, 1, 2, 3, 4, 5, 6, 7});
        CHECK(r.tv_distance > 0.0);
        CHECK(r.mean_abs_diff <= r.max_abs_diff);
        CHECK(r.max_abs_diff <= 1.0);
        CHECK(r.tv_distance <= 1.0);
        // for probability vectors TV = V/2 * mean |diff|
        CHECK(r.tv_distance == doctest::Approx(r.mean_abs_diff * 16 / 2.0).epsilon(1e-12));
    }
}

TEST_CASE("primacy is symmetric in the pair") {
    const ToyModel m = causal_model(3);
    const Sequence x = {4, 1, 7, 2}, rx = {2, 7, 1, 4};
    CHECK(primacy_bias(m, x).tv_distance == primacy_bias(m, rx).tv_distance);
    const auto a = m.predict(x), b = m.predict(rx);
    CHECK(compare_distributions(a, b).tv_distance == compare_distributions(b, a).tv_distance);
    CHECK(compare_distributions(a, a).tv_distance == 0.0);
}

TEST_CASE("primacy needs two tokens") {
    CHECK_THROWS_AS(primacy_bias(causal_model(0), Sequence{3}), InputError);
}

TEST_CASE("Theorem 1 sweep") {
    int witnesses = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        Rng rng(s + 500);
        Sequence x(8);
        do
            for (Token& t : x) t = Token(rng.below(16));
        while (std::equal(x.begin(), x.end(), x.rbegin()));
        witnesses += primacy_bias(causal_model(s), x).tv_distance > 1e-6 ? 1 : 0;
    }
    CHECK(witnesses >= 99);
}

TEST_CASE("content-only bidirectional contrast") {
    ToyModelConfig c;
    c.mask = AttentionMask::bidirectional();
    c.positional_encoding = false;
    for (std::uint64_t s = 0; s < 10; ++s) {
        c.seed = s;
        CHECK(primacy_bias(ToyModel(c), Sequence{0, 1, 2, 3, 4, 5, 6, 7}).tv_distance <= 1e-7);
    }
}

TEST_CASE("order dependence") {
    const ToyModel m = causal_model(2);
    CHECK(order_dependence(m, Sequence{5, 5, 5, 5}, 20, 1) == 0.0);

    const Sequence x = {1, 6, 3, 12};
    const double sampled = order_dependence(m, x, 50, 9);
    const double exhaustive = exhaustive_order_dependence(m, x);
    CHECK(sampled > 0.0);
    CHECK(sampled <= exhaustive);

    // S_2 has a single nontrivial pair
    const Sequence two = {2, 9};
    CHECK(order_dependence(m, two, 30, 4) == doctest::Approx(exhaustive_order_dependence(m, two)).epsilon(1e-15));
    CHECK(order_dependence(m, x, 50, 9) == sampled);

    CHECK_THROWS_AS(order_dependence(m, Sequence{1}, 5, 0), InputError);
    CHECK_THROWS_AS(order_dependence(m, x, 0, 0), InputError);
}

TEST_CASE("anchor probe validation") {
    AnchorProbe p = probe_for(16, {1, 2});
    CHECK_NOTHROW(p.validate(16));
    CHECK(p.with_anchor(7) == Sequence{7, 3, 9, 4, 1});
    p.anchor_values = {};
    CHECK_THROWS_AS(p.validate(16), InputError);
    p.anchor_values = {3, 3};
    CHECK_THROWS_AS(p.validate(16), InputError);
    p.anchor_values = {3, 16};
    CHECK_THROWS_AS(p.validate(16), InputError);
    p.anchor_values = {1, 2};
    p.anchor_slot = 5;
    CHECK_THROWS_AS(p.validate(16), InputError);
}

TEST_CASE("anchoring slope") {
    int nonzero = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const double slope = anchoring_slope(causal_model(s), probe_for(16, {0, 2, 5, 9, 13}));
        CHECK(std::isfinite(slope));
        nonzero += std::abs(slope) > 0.0 ? 1 : 0;
    }
    CHECK(nonzero == 100);

    AnchorProbe degenerate = probe_for(16, {1, 2});
    degenerate.value_map.assign(16, 3.0);
    CHECK_THROWS_AS(anchoring_slope(causal_model(0), degenerate), InputError);
    CHECK_THROWS_AS(anchoring_slope(causal_model(0), probe_for(16, {4})), InputError);
}

TEST_CASE("slope vanishes for identical anchor embeddings") {
    const ToyModel m = causal_model(8).with_tied_embeddings(2, 11);
    CHECK(anchoring_slope(m, probe_for(16, {2, 11})) == 0.0);
    CHECK(anchor_mutual_information(m, probe_for(16, {2, 11})).nats == 0.0);
}

TEST_CASE("slope vanishes when the anchor is outside the window") {
    // receptive field of the final query is L*(w-1)+1 = 5 positions
    ToyModelConfig c;
    c.layers = 2;
    c.mask = AttentionMask::windowed(3);
    c.max_seq = 8;
    for (std::uint64_t s = 0; s < 10; ++s) {
        c.seed = s;
        const ToyModel m(c);
        AnchorProbe p;
        p.anchor_slot = 0;
        p.anchor_values = {1, 4, 8, 12};
        p.query = {0, 5, 5, 6, 6, 7, 7, 2};
        p.value_map = identity_value_map(16);
        CHECK(std::abs(anchoring_slope(m, p)) <= 1e-7);
        CHECK(mean_anchor_attention(m, p) == 0.0);
    }
}

TEST_CASE("windowed content influence does not grow with n") {
    // two inputs that differ only in their first w tokens, filler afterwards
    const std::size_t w = 2;
    std::vector<double> medians;
    for (std::size_t n : {2 * w, 4 * w, 8 * w}) {
        std::vector<double> tvs;
        for (std::uint64_t s = 0; s < 51; ++s) {
            ToyModelConfig c;
            c.layers = 2;
            c.max_seq = 16;
            c.mask = AttentionMask::windowed(w);
            c.seed = s;
            const ToyModel m(c);
            Rng rng(s + 77);
            Sequence a(n, 0), b(n, 0);
            for (std::size_t i = 0; i < w; ++i) {
                a[i] = Token(1 + rng.below(15));
                b[i] = Token(1 + rng.below(15));
            }
            tvs.push_back(total_variation(m.predict(a), m.predict(b)));
        }
        std::nth_element(tvs.begin(), tvs.begin() + 25, tvs.end());
        medians.push_back(tvs[25]);
    }
    CHECK(medians[0] > 0.0);
    CHECK(medians[1] <= medians[0]);
    CHECK(medians[2] <= medians[1]);
}

TEST_CASE("mutual information oracles") {
    std::vector<OutputDistribution> same(3, OutputDistribution{{0.2, 0.3, 0.5}});
    const auto zero = mutual_information(same);
    CHECK(zero.nats == 0.0);
    CHECK(zero.anchor_count == 3);
    CHECK(zero.method == MiMethod::plug_in);

    std::vector<OutputDistribution> disjoint = {OutputDistribution{{1, 0}}, OutputDistribution{{0, 1}}};
    CHECK(mutual_information(disjoint).nats == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    std::vector<OutputDistribution> four = {OutputDistribution{{1, 0, 0, 0}}, OutputDistribution{{0, 1, 0, 0}},
                                            OutputDistribution{{0, 0, 1, 0}}, OutputDistribution{{0, 0, 0, 1}}};
    CHECK(mutual_information(four).nats == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    CHECK_THROWS_AS(mutual_information(std::vector<OutputDistribution>{}), InputError);
}

TEST_CASE("Theorem 2 sweep: positive and bounded MI") {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto mi = anchor_mutual_information(causal_model(s), probe_for(16, {0, 2, 4, 6, 8, 10, 12, 14}));
        CHECK(mi.nats > 0.0);
        CHECK(mi.nats <= std::log(8.0));
        CHECK(mi.anchor_count == 8);
    }
}

TEST_CASE("MI stays within ln(anchor count) on random distributions") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + rng.below(6), v = 2 + rng.below(6);
        std::vector<OutputDistribution> ds(k);
        for (auto& d : ds) {
            d.probs.resize(v);
            double total = 0.0;
            for (double& p : d.probs) total += p = rng.uniform();
            for (double& p : d.probs) p /= total;
        }
        const double nats = mutual_information(ds).nats;
        CHECK(nats >= 0.0);
        CHECK(nats <= std::log(double(std::min(k, v))) + 1e-12);
    }
}

TEST_CASE("I_min bound") {
    CHECK(imin_bound(32, 0.05, 2) == 3.2);
    CHECK(imin_bound(32, 0.0, 2) == 0.0);
    CHECK(imin_bound(1, 1, std::log(2.0)) == doctest::Approx(0.6931).epsilon(1e-4));
    CHECK_THROWS_AS(imin_bound(-1, 0.1, 1), InputError);
    CHECK_THROWS_AS(imin_bound(1, -0.1, 1), InputError);
    CHECK_THROWS_AS(imin_bound(1, 0.1, -1), InputError);
}

TEST_CASE("entropy") {
    CHECK(entropy(OutputDistribution{{1, 0, 0}}) == 0.0);
    CHECK(entropy(OutputDistribution{{0.25, 0.25, 0.25, 0.25}}) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("mean anchor attention is a probability") {
    const double a = mean_anchor_attention(causal_model(4), probe_for(16, {1, 5, 9}));
    CHECK(a > 0.0);
    CHECK(a < 1.0);
}
