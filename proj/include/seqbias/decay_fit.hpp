#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqbias/error.hpp"

namespace seqbias {

// Competing bias-vs-position laws, with position p >= 1:
//   exponential  B0 * exp(-lambda * (p - 1))
//   power_law    B0 * p^(-alpha)
//   linear       B0 - slope * (p - 1)
//   null         B0
enum class DecayModel { exponential, power_law, linear, null };

inline constexpr std::array<DecayModel, 4> kAllDecayModels = {
    DecayModel::exponential, DecayModel::power_law, DecayModel::linear, DecayModel::null};

std::string decay_model_name(DecayModel model);
DecayModel parse_decay_model(std::string_view name);
// Number of curve parameters, excluding the noise scale.
std::size_t parameter_count(DecayModel model);
double evaluate(DecayModel model, std::span<const double> params, double position);

struct DecayRow {
    double position = 1.0;
    double bias = 0.0;
    std::optional<double> se;
    std::optional<std::string> group;
    std::optional<long> n_obs;
};

struct DecayDataset {
    std::vector<DecayRow> rows;

    // Rows are weighted by 1/se^2 iff every row carries an se.
    bool weighted() const;
    std::size_t distinct_positions() const;
    std::vector<std::string> groups() const;  // distinct labels, first-seen order
    // Throws InputError unless there are >= 3 distinct positions, positions are
    // >= 1, values are finite and se is either absent everywhere or positive
    // everywhere.
    void validate() const;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> last_iterate)
        : Error(what), last_iterate_(std::move(last_iterate)) {}
    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

private:
    std::vector<double> last_iterate_;
};

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
};

struct FitResult {
    DecayModel model = DecayModel::null;
    std::vector<double> params;  // in the order of parameter_names(model)
    double loglik = 0.0;
    double bic = 0.0;
    double r_squared = 0.0;
    double rss = 0.0;  // weighted when the dataset is weighted
    std::size_t rows = 0;
    std::optional<ConfidenceInterval> decay_ci;

    double predict(double position) const { return evaluate(model, params, position); }
    // Named parameter lookup; throws InputError for an unknown name.
    double param(std::string_view name) const;
};

std::vector<std::string> parameter_names(DecayModel model);
// Name of the decay-rate parameter, or empty for the null model.
std::string decay_parameter_name(DecayModel model);

// Gaussian maximum likelihood (weighted least squares plus a noise scale).
// Nonlinear laws use multi-start Levenberg-Marquardt over a fixed grid.
FitResult fit(const DecayDataset& dataset, DecayModel model);

// Gaussian log-likelihood at the MLE noise scale, and BIC with the noise
// scale counted as one extra parameter.
double gaussian_loglik(double weighted_rss, std::size_t rows, double sum_log_weights);
double bic(double loglik, std::size_t curve_params, std::size_t rows);

struct ComparisonEntry {
    DecayModel model = DecayModel::null;
    std::optional<FitResult> fit;
    std::string error;  // set when the fit failed
    double delta_bic = 0.0;
};

struct ComparisonTable {
    std::vector<ComparisonEntry> entries;  // successful fits ascending by BIC, failures last
    DecayModel winner = DecayModel::null;

    const ComparisonEntry& entry(DecayModel model) const;
};

ComparisonTable build_comparison(std::vector<ComparisonEntry> entries);
ComparisonTable compare(const DecayDataset& dataset);

// Percentile bootstrap over row resampling for the model's decay parameter.
ConfidenceInterval bootstrap_ci(const DecayDataset& dataset, DecayModel model, double level,
                                std::size_t resamples, std::uint64_t seed);

struct RecoveryConfig {
    std::size_t n_sims = 100;
    double beta_lo = 0.05;
    double beta_hi = 0.25;
    double noise_sigma = 2.5;
    std::vector<double> positions = {1, 2, 3, 4, 5, 6, 7, 8};
    double b0 = 48.0;
    std::uint64_t seed = 0;
};

struct RecoveryPair {
    double beta_true = 0.0;
    double beta_recovered = 0.0;
};

struct RecoveryReport {
    std::vector<RecoveryPair> pairs;
    std::optional<double> correlation;  // absent when either side has zero variance
    double mae = 0.0;
    std::size_t excluded = 0;
};

RecoveryReport parameter_recovery(const RecoveryConfig& config);

// Leave-one-group-out: fit the exponential law on all other groups, predict the
// held-out rows and return the pooled out-of-sample R^2.
double loo_cv(const DecayDataset& dataset);

// Rows of a dataset generated from B0 * exp(-lambda (p - 1)).
DecayDataset exponential_dataset(double b0, double lambda, std::span<const double> positions);

}  // namespace seqbias
