#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace seqbias {

struct PredictionInputs {
    double beta = 0.0127;
    double l_wm = 4.0;
    double l_llm = 32.0;
    double kappa = 0.0;  // see default_kappa()
    double gamma = 1.2;
    std::optional<double> d_llm;
};

// Lower and upper edge of the predicted effect-size band for anchor position.
inline constexpr double kPredictedBandLo = 0.35;
inline constexpr double kPredictedBandHi = 0.55;

// kappa at which predict_d with beta = 0.0127 and L_WM = 4 lands on the band
// midpoint 0.45.
double default_kappa();

// kappa * (1 - exp(-beta * L_WM)).
double predict_d(const PredictionInputs& inputs);

struct CrossSystemPrediction {
    double d_human = 0.0;
    // True when beta = 0 and the value is the continuous extension
    // gamma * d_llm * L_WM / L_LLM.
    bool beta_zero_limit = false;
};

// d_llm * (1 - exp(-beta L_WM)) / (1 - exp(-beta L_LLM)) * gamma.
CrossSystemPrediction map_cross_system(const PredictionInputs& inputs);

enum class Condition { anchor_before, anchor_after };
enum class Load { low, high };

std::string condition_name(Condition c);
Condition parse_condition(const std::string& s);
std::string load_name(Load l);
Load parse_load(const std::string& s);

struct TrialRecord {
    std::string source;
    std::string item;
    Condition condition = Condition::anchor_before;
    std::optional<Load> load;
    double anchor = 0.0;
    double estimate = 0.0;
    double true_value = 0.0;
    std::optional<long> position;
    std::optional<double> covariate;
};

// |estimate - anchor| / |true_value - anchor|: 0 is full anchoring, 1 is an
// estimate at the true value.
double anchoring_index(const TrialRecord& record);

struct GroupSummary {
    double mean = 0.0;
    double sd = 0.0;
    std::size_t n = 0;
};

struct EffectReport {
    double d = 0.0;  // Cohen's d with pooled SD, group 1 minus group 2
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double se = 0.0;
    double t = 0.0;   // Welch
    double df = 0.0;  // Welch-Satterthwaite
    double p_value = 1.0;
    GroupSummary group1;
    GroupSummary group2;
};

EffectReport effect_size(std::span<const double> group1, std::span<const double> group2);
EffectReport effect_size_from_summary(const GroupSummary& group1, const GroupSummary& group2);

struct Correlation {
    double r = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

// Pearson r with a 95% Fisher-z interval.
Correlation correlate(std::span<const double> xs, std::span<const double> ys);

enum class GroupField { source, item, load };

GroupField parse_group_field(const std::string& s);

struct GroupEffect {
    std::string group;
    std::optional<EffectReport> report;
    std::string flag;  // why the report is missing
};

// Position effect per group: effect_size(AI | anchor_after, AI | anchor_before),
// positive when anchor-first trials are more strongly anchored.
std::vector<GroupEffect> grouped_effects(std::span<const TrialRecord> records, GroupField group_by);

// Position effect over all records.
EffectReport position_effect(std::span<const TrialRecord> records);

}  // namespace seqbias
