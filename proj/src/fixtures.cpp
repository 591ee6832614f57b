#include "seqbias/fixtures.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <sstream>

#include "seqbias/error.hpp"
#include "seqbias/io.hpp"

namespace seqbias::fixtures {

namespace {

// n standardized scores (mean 0, sample SD 1) from evenly spaced normal quantiles.
std::vector<double> standard_scores(std::size_t n) {
    const boost::math::normal_distribution<double> unit;
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i)
        z[i] = boost::math::quantile(unit, (double(i) + 0.5) / double(n));
    double m = 0.0;
    for (double v : z) m += v;
    m /= double(n);
    double ss = 0.0;
    for (double& v : z) {
        v -= m;
        ss += v * v;
    }
    const double sd = std::sqrt(ss / double(n - 1));
    for (double& v : z) v /= sd;
    return z;
}

}  // namespace

DecayDataset fig2() {
    constexpr double bias[] = {48, 42, 35, 30, 26, 23, 20, 18};
    constexpr double se[] = {3.0, 2.5, 2.8, 2.2, 2.4, 2.6, 2.3, 2.5};
    DecayDataset ds;
    for (int p = 1; p <= 8; ++p) ds.rows.push_back({double(p), bias[p - 1], se[p - 1], {}, {}});
    return ds;
}

std::vector<LlmRate> table3() {
    return {{"GPT-4", 42.3, 39.1, 45.5},       {"Claude-3", 38.7, 35.4, 42.0},
            {"Gemini-1.5", 44.1, 40.8, 47.4},  {"Llama-3-70B", 51.2, 47.8, 54.6},
            {"Mistral-Large", 38.4, 35.1, 41.7}, {"Command-R+", 47.8, 44.4, 51.2}};
}

std::vector<TertileSummary> table4_summary() {
    return {{"low_ospan", 58, 0.61, 0.38, 0.84},
            {"medium_ospan", 59, 0.42, 0.21, 0.63},
            {"high_ospan", 58, 0.24, 0.04, 0.44}};
}

std::vector<TrialRecord> table4_trials() {
    constexpr double kAfterMean = 0.68;
    constexpr double kSd = 0.20;
    constexpr double kAnchor = 10.0;
    constexpr double kTrue = 110.0;
    constexpr double kSpanCenter[] = {25.0, 45.0, 65.0};

    std::vector<TrialRecord> out;
    const auto summary = table4_summary();
    for (std::size_t t = 0; t < summary.size(); ++t) {
        const auto& row = summary[t];
        const std::size_t n_before = (row.n + 1) / 2;
        const std::size_t n_after = row.n - n_before;
        auto emit = [&](Condition c, std::size_t count, double mean, std::size_t offset) {
            const auto z = standard_scores(count);
            for (std::size_t i = 0; i < count; ++i) {
                TrialRecord r;
                r.source = row.tertile;
                r.item = "item" + std::to_string((offset + i) % 8 + 1);
                r.condition = c;
                r.anchor = kAnchor;
                r.true_value = kTrue;
                r.estimate = kAnchor + (kTrue - kAnchor) * (mean + kSd * z[i]);
                r.covariate = kSpanCenter[t] + 10.0 * (double(offset + i) / double(row.n) - 0.5);
                out.push_back(std::move(r));
            }
        };
        emit(Condition::anchor_before, n_before, kAfterMean - row.d * kSd, 0);
        emit(Condition::anchor_after, n_after, kAfterMean, n_before);
    }
    return out;
}

std::vector<std::string> names() { return {"fig2", "table3", "table4"}; }

std::string fixture_csv(const std::string& name) {
    if (name == "fig2") return io::decay_csv(fig2());
    if (name == "table4") return io::trial_csv(table4_trials());
    if (name == "table3") {
        std::ostringstream out;
        out << "model,rate_percent,ci_lo,ci_hi\n";
        for (const auto& r : table3())
            out << r.model << ',' << io::format_double(r.rate) << ',' << io::format_double(r.ci_lo)
                << ',' << io::format_double(r.ci_hi) << '\n';
        return out.str();
    }
    throw InputError("unknown fixture '" + name + "'");
}

}  // namespace seqbias::fixtures
