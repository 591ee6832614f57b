#include <doctest.h>

#include <cmath>

#include "seqbias/error.hpp"
#include "seqbias/privilege.hpp"

using namespace seqbias;

TEST_CASE("harmonic numbers") {
    CHECK(harmonic(0) == 0.0);
    CHECK(harmonic(1) == 1.0);
    CHECK(harmonic(4) == doctest::Approx(25.0 / 12.0).epsilon(1e-15));
    CHECK(harmonic(7) == doctest::Approx(363.0 / 140.0).epsilon(1e-15));
}

TEST_CASE("single row tensor gives phi = [1]") {
    AttentionTensor t(1, 1);
    t.at(0, 0, 0) = 1.0;
    const auto p = privilege_from_attention(std::span(&t, 1));
    REQUIRE(p.phi.size() == 1);
    CHECK(p.phi[0] == 1.0);
    CHECK(p.source == PrivilegeSource::empirical);
}

TEST_CASE("hand-built L=1 n=2 tensor") {
    AttentionTensor t(1, 2);
    t.at(0, 0, 0) = 1.0;
    t.at(0, 1, 0) = 0.5;
    t.at(0, 1, 1) = 0.5;
    const auto p = privilege_from_attention(std::span(&t, 1));
    CHECK(p.phi[0] == 1.5);
    CHECK(p.phi[1] == 0.5);
}

TEST_CASE("averaging over several tensors") {
    std::vector<AttentionTensor> ts(2, AttentionTensor(1, 2));
    ts[0].at(0, 0, 0) = ts[1].at(0, 0, 0) = 1.0;
    ts[0].at(0, 1, 0) = 0.2;
    ts[0].at(0, 1, 1) = 0.8;
    ts[1].at(0, 1, 0) = 0.6;
    ts[1].at(0, 1, 1) = 0.4;
    const auto p = privilege_from_attention(ts);
    CHECK(p.phi[0] == doctest::Approx(1.4).epsilon(1e-15));
    CHECK(p.phi[1] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(p.num_samples == 2);
}

TEST_CASE("closed form examples") {
    const auto p = privilege_uniform(2, 3);
    REQUIRE(p.phi.size() == 3);
    CHECK(p.phi[0] == doctest::Approx(11.0 / 3.0).epsilon(1e-15));
    CHECK(p.phi[1] == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
    CHECK(p.phi[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(p.source == PrivilegeSource::uniform_closed_form);
    for (std::size_t L : {1, 3, 32}) CHECK(privilege_uniform(L, 1).phi == std::vector<double>{double(L)});
    for (std::size_t n : {2, 5, 17, 64}) {
        const auto q = privilege_uniform(1, n);
        CHECK(q.phi.front() - q.phi.back() == doctest::Approx(harmonic(n - 1)).epsilon(1e-13));
    }
}

TEST_CASE("closed form equals empirical on uniform tensors") {
    for (std::size_t L = 1; L <= 4; ++L)
        for (std::size_t n = 2; n <= 32; ++n) {
            const auto t = AttentionTensor::uniform(L, n);
            const auto emp = privilege_from_attention(std::span(&t, 1));
            const auto cf = privilege_uniform(L, n);
            for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(emp.phi[j] - cf.phi[j]) <= 1e-12);
        }
}

TEST_CASE("privilege gap") {
    CHECK(privilege_gap(privilege_uniform(32, 8)) == doctest::Approx(82.971).epsilon(1e-4));
    CHECK(privilege_gap(privilege_uniform(32, 8)) == 32.0 * harmonic(7));
    const double g = privilege_gap(privilege_uniform(32, 1000));
    CHECK(g == doctest::Approx(239.50).epsilon(1e-4));
    CHECK(std::abs(g / (32.0 * std::log(1000.0)) - 1.0) < 0.1);
    CHECK(privilege_gap(privilege_uniform(1, 2)) == 1.0);
    CHECK_THROWS_AS(privilege_gap(privilege_uniform(2, 1)), InputError);
}

TEST_CASE("gap ratio approaches one from above") {
    // exact rational harmonic sums, computed offline
    const std::pair<std::size_t, double> expected[] = {
        {100, 1.1242532433204213}, {1000, 1.0834881315675657}, {10000, 1.0626649657622111}};
    double previous = 2.0;
    for (const auto& [n, oracle] : expected) {
        const double ratio = privilege_gap(privilege_uniform(3, n)) / (3.0 * std::log(double(n)));
        CHECK(ratio == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(ratio > 1.0);
        CHECK(ratio < previous);
        previous = ratio;
    }
    // the ratio first drops to 1.1 between n = 100 and n = 1000
    CHECK(privilege_gap(privilege_uniform(1, 1000)) / std::log(1000.0) <= 1.1);
}

TEST_CASE("monotonicity check") {
    for (std::size_t L : {1, 4})
        for (std::size_t n : {2, 9, 50}) CHECK(check_monotonicity(privilege_uniform(L, n)).holds);

    PrivilegeProfile flat{{1, 1, 1}, 1, 3, PrivilegeSource::uniform_closed_form, 0};
    auto r = check_monotonicity(flat);
    CHECK_FALSE(r.holds);
    REQUIRE(r.first_violation);
    CHECK(*r.first_violation == 1);

    PrivilegeProfile late{{3, 2, 2.5}, 1, 3, PrivilegeSource::empirical, 1};
    r = check_monotonicity(late);
    CHECK_FALSE(r.holds);
    CHECK(*r.first_violation == 2);

    // steps below the empirical slack count as ties
    PrivilegeProfile tiny{{1.0 + 5e-10, 1.0}, 1, 2, PrivilegeSource::empirical, 1};
    CHECK_FALSE(check_monotonicity(tiny).holds);
    tiny.source = PrivilegeSource::uniform_closed_form;
    CHECK(check_monotonicity(tiny).holds);
}

TEST_CASE("proof identity holds for key-independent attention") {
    // Phi(j) - Phi(k) = sum_l sum_{i=j..k-1} A_ij, with 1-based i, j
    for (std::size_t L = 1; L <= 3; ++L)
        for (std::size_t n = 2; n <= 10; ++n) {
            const auto t = AttentionTensor::uniform(L, n);
            const auto p = privilege_from_attention(std::span(&t, 1));
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = j + 1; k < n; ++k) {
                    double rhs = 0.0;
                    for (std::size_t l = 0; l < L; ++l)
                        for (std::size_t i = j; i < k; ++i) rhs += t(l, i, j);
                    CHECK(std::abs((p.phi[j] - p.phi[k]) - rhs) <= 1e-9);
                }
        }
}

TEST_CASE("proof identity fails once attention depends on the key") {
    AttentionTensor t(1, 2);
    t.at(0, 0, 0) = 1.0;
    t.at(0, 1, 0) = 0.2;
    t.at(0, 1, 1) = 0.8;
    const auto p = privilege_from_attention(std::span(&t, 1));
    const double lhs = p.phi[0] - p.phi[1];  // 1.2 - 0.8
    const double rhs = t(0, 0, 0);           // i = j = 1
    CHECK(lhs == doctest::Approx(0.4));
    CHECK(std::abs(lhs - rhs) > 0.5);
    // strict decrease still holds here
    CHECK(check_monotonicity(p).holds);
}

TEST_CASE("empirical profiles of causal toy models decrease") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ToyModelConfig c;
        c.layers = 1 + seed % 3;
        c.max_seq = 8;
        c.seed = seed;
        const ToyModel m(c);
        const auto inputs = random_sequences(32, 8, c.vocab_size, seed + 1000);
        const auto p = privilege_empirical(m, inputs);
        CHECK(p.num_samples == 32);
        CHECK(p.layers == c.layers);
        CHECK(check_monotonicity(p).holds);
        for (double v : p.phi) CHECK(v >= 0.0);
        // total attention mass is L * n
        double total = 0.0;
        for (double v : p.phi) total += v;
        CHECK(total == doctest::Approx(double(c.layers * 8)).epsilon(1e-12));
    }
}

TEST_CASE("windowed privilege") {
    const std::size_t w = 3, n = 10;
    const AttentionMask mask = AttentionMask::windowed(w);
    const auto t = AttentionTensor::uniform(2, n, mask);
    auto p = privilege_from_attention(std::span(&t, 1));
    // keys more than w before the final query get nothing from it
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t j = 0; j + w < n; ++j) CHECK(t(l, n - 1, j) == 0.0);
    p.phi.resize(w);
    CHECK(check_monotonicity(p).holds);

    ToyModelConfig c;
    c.mask = mask;
    c.max_seq = n;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        c.seed = seed;
        auto q = privilege_empirical(ToyModel(c), random_sequences(32, n, c.vocab_size, seed));
        q.phi.resize(w);
        CHECK(check_monotonicity(q).holds);
    }
}

TEST_CASE("privilege errors") {
    CHECK_THROWS_AS(privilege_from_attention(std::span<const AttentionTensor>{}), InputError);
    std::vector<AttentionTensor> mixed = {AttentionTensor::uniform(1, 2), AttentionTensor::uniform(1, 3)};
    CHECK_THROWS_AS(privilege_from_attention(mixed), ShapeError);
    const ToyModel m{ToyModelConfig{}};
    CHECK_THROWS_AS(privilege_empirical(m, std::vector<Sequence>{}), InputError);
    CHECK_THROWS_AS(privilege_empirical(m, std::vector<Sequence>{{1, 2}, {1, 2, 3}}), ShapeError);
}

TEST_CASE("random sequences are seeded") {
    const auto a = random_sequences(5, 4, 16, 3), b = random_sequences(5, 4, 16, 3);
    CHECK(a == b);
    CHECK(a != random_sequences(5, 4, 16, 4));
    for (const auto& s : a) {
        CHECK(s.size() == 4);
        for (Token t : s) CHECK(t < 16);
    }
}
