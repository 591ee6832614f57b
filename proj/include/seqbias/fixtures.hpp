#pragma once

#include <string>
#include <vector>

#include "seqbias/decay_fit.hpp"
#include "seqbias/predict_human.hpp"

namespace seqbias::fixtures {

// Mean anchoring bias (percentage points, with SE) at anchor positions 1-8,
// digitized from the plotted coordinates of the published position curve.
// Digitized, not raw data.
DecayDataset fig2();

struct LlmRate {
    std::string model;
    double rate = 0.0;  // percent
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

// Published overall anchoring rates for six representative LLMs.
std::vector<LlmRate> table3();

struct TertileSummary {
    std::string tertile;
    std::size_t n = 0;
    double d = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

// Published position effect by working-memory tertile.
std::vector<TertileSummary> table4_summary();

// Deterministic trial-level reconstruction of the tertile table: per tertile,
// anchor_before and anchor_after AI samples built from normal quantiles with
// a common SD of 0.20, so the sample position effect equals the published d.
// The tertile name is stored in `source`; covariate holds a synthetic span
// score. Not real participant data.
std::vector<TrialRecord> table4_trials();

std::vector<std::string> names();

// CSV text of a named fixture. Throws InputError for an unknown name.
std::string fixture_csv(const std::string& name);

}  // namespace seqbias::fixtures
