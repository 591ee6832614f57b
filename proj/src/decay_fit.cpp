#include "seqbias/decay_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "seqbias/rng.hpp"
#include "seqbias/stats.hpp"

namespace seqbias {

namespace {

constexpr std::array<double, 5> kRateGrid = {0.01, 0.05, 0.1, 0.2, 0.5};
constexpr std::array<double, 5> kLevelQuantiles = {0.0, 0.25, 0.5, 0.75, 1.0};
constexpr std::size_t kMaxIterations = 500;
constexpr std::size_t kBootstrapRetries = 100;

struct Problem {
    std::vector<double> p, y, w;
    double sum_log_w = 0.0;
};

Problem make_problem(const DecayDataset& dataset) {
    Problem pr;
    const bool weighted = dataset.weighted();
    for (const auto& row : dataset.rows) {
        pr.p.push_back(row.position);
        pr.y.push_back(row.bias);
        const double w = weighted ? 1.0 / (*row.se * *row.se) : 1.0;
        pr.w.push_back(w);
        pr.sum_log_w += std::log(w);
    }
    return pr;
}

double weighted_rss(const Problem& pr, DecayModel model, std::span<const double> theta) {
    double s = 0.0;
    for (std::size_t i = 0; i < pr.p.size(); ++i) {
        const double r = pr.y[i] - evaluate(model, theta, pr.p[i]);
        s += pr.w[i] * r * r;
    }
    return s;
}

double weighted_mean(const Problem& pr) {
    double sw = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < pr.p.size(); ++i) {
        sw += pr.w[i];
        swy += pr.w[i] * pr.y[i];
    }
    return swy / sw;
}

// Partial derivatives of the two-parameter nonlinear laws.
std::array<double, 2> gradient(DecayModel model, std::span<const double> theta, double p) {
    if (model == DecayModel::exponential) {
        const double e = std::exp(-theta[1] * (p - 1.0));
        return {e, -theta[0] * (p - 1.0) * e};
    }
    const double e = std::pow(p, -theta[1]);
    return {e, -theta[0] * std::log(p) * e};
}

struct LmOutcome {
    std::array<double, 2> theta;
    double cost;
    bool converged;
};

LmOutcome levenberg_marquardt(const Problem& pr, DecayModel model, std::array<double, 2> theta) {
    const bool nonneg_rate = model == DecayModel::exponential;
    double cost = weighted_rss(pr, model, theta);
    double mu = 1e-3;
    for (std::size_t it = 0; it < kMaxIterations; ++it) {
        double a00 = 0, a01 = 0, a11 = 0, g0 = 0, g1 = 0;
        for (std::size_t i = 0; i < pr.p.size(); ++i) {
            const auto j = gradient(model, theta, pr.p[i]);
            const double r = pr.y[i] - evaluate(model, theta, pr.p[i]);
            a00 += pr.w[i] * j[0] * j[0];
            a01 += pr.w[i] * j[0] * j[1];
            a11 += pr.w[i] * j[1] * j[1];
            g0 += pr.w[i] * j[0] * r;
            g1 += pr.w[i] * j[1] * r;
        }
        if (!std::isfinite(a00 + a01 + a11 + g0 + g1)) return {theta, cost, false};

        bool accepted = false;
        while (mu < 1e20) {
            const double d00 = a00 + mu * std::max(a00, 1e-300);
            const double d11 = a11 + mu * std::max(a11, 1e-300);
            const double det = d00 * d11 - a01 * a01;
            if (det != 0.0 && std::isfinite(det)) {
                std::array<double, 2> trial = {theta[0] + (d11 * g0 - a01 * g1) / det,
                                               theta[1] + (d00 * g1 - a01 * g0) / det};
                if (nonneg_rate && trial[1] < 0.0) {
                    // clamp the rate and take the B0 step conditional on it
                    const double drate = -theta[1];
                    trial = {theta[0] + (g0 - a01 * drate) / d00, 0.0};
                }
                const double trial_cost = weighted_rss(pr, model, trial);
                if (std::isfinite(trial_cost) && trial_cost < cost) {
                    const double step = std::abs(trial[0] - theta[0]) + std::abs(trial[1] - theta[1]);
                    const double size = std::abs(theta[0]) + std::abs(theta[1]);
                    const double gain = cost - trial_cost;
                    theta = trial;
                    cost = trial_cost;
                    mu = std::max(mu / 3.0, 1e-12);
                    accepted = true;
                    if (gain <= 1e-15 * cost || step <= 1e-14 * (size + 1e-300))
                        return {theta, cost, true};
                    break;
                }
            }
            mu *= 4.0;
        }
        // No descent direction left at machine precision: a stationary point,
        // or a minimum on the rate >= 0 boundary.
        if (!accepted) return {theta, cost, true};
    }
    return {theta, cost, false};
}

FitResult finish(const Problem& pr, DecayModel model, std::vector<double> theta) {
    FitResult r;
    r.model = model;
    r.params = std::move(theta);
    r.rows = pr.p.size();
    r.rss = weighted_rss(pr, model, r.params);
    r.loglik = gaussian_loglik(r.rss, r.rows, pr.sum_log_w);
    r.bic = bic(r.loglik, parameter_count(model), r.rows);
    if (model == DecayModel::null) {
        r.r_squared = 0.0;
    } else {
        const double ybar = weighted_mean(pr);
        double tss = 0.0;
        for (std::size_t i = 0; i < pr.p.size(); ++i)
            tss += pr.w[i] * (pr.y[i] - ybar) * (pr.y[i] - ybar);
        r.r_squared = tss > 0.0 ? 1.0 - r.rss / tss : 0.0;
    }
    return r;
}

FitResult fit_linear(const Problem& pr) {
    double sw = 0, st = 0, sy = 0;
    for (std::size_t i = 0; i < pr.p.size(); ++i) {
        sw += pr.w[i];
        st += pr.w[i] * (pr.p[i] - 1.0);
        sy += pr.w[i] * pr.y[i];
    }
    const double tbar = st / sw, ybar = sy / sw;
    double stt = 0, sty = 0;
    for (std::size_t i = 0; i < pr.p.size(); ++i) {
        const double dt = pr.p[i] - 1.0 - tbar;
        stt += pr.w[i] * dt * dt;
        sty += pr.w[i] * dt * (pr.y[i] - ybar);
    }
    const double rise = sty / stt;
    return finish(pr, DecayModel::linear, {ybar - rise * tbar, -rise});
}

FitResult fit_nonlinear(const Problem& pr, DecayModel model) {
    std::vector<double> sorted = pr.y;
    std::sort(sorted.begin(), sorted.end());
    std::optional<LmOutcome> best;
    LmOutcome last{};
    for (double q : kLevelQuantiles) {
        const double level = stats::quantile(sorted, q);
        for (double rate : kRateGrid) {
            const LmOutcome out = levenberg_marquardt(pr, model, {level, rate});
            last = out;
            if (!out.converged) continue;
            if (!best || out.cost < best->cost) best = out;
        }
    }
    if (!best)
        throw ConvergenceError(decay_model_name(model) + " fit did not converge from any start",
                               {last.theta[0], last.theta[1]});
    return finish(pr, model, {best->theta[0], best->theta[1]});
}

}  // namespace

std::string decay_model_name(DecayModel model) {
    switch (model) {
        case DecayModel::exponential: return "exponential";
        case DecayModel::power_law: return "power_law";
        case DecayModel::linear: return "linear";
        case DecayModel::null: return "null";
    }
    return "unknown";
}

DecayModel parse_decay_model(std::string_view name) {
    for (DecayModel m : kAllDecayModels)
        if (decay_model_name(m) == name) return m;
    throw InputError("unknown decay model '" + std::string(name) + "'");
}

std::size_t parameter_count(DecayModel model) { return model == DecayModel::null ? 1 : 2; }

std::vector<std::string> parameter_names(DecayModel model) {
    switch (model) {
        case DecayModel::exponential: return {"B0", "lambda"};
        case DecayModel::power_law: return {"B0", "alpha"};
        case DecayModel::linear: return {"B0", "slope"};
        case DecayModel::null: return {"B0"};
    }
    return {};
}

std::string decay_parameter_name(DecayModel model) {
    const auto names = parameter_names(model);
    return names.size() > 1 ? names[1] : std::string{};
}

double evaluate(DecayModel model, std::span<const double> params, double position) {
    switch (model) {
        case DecayModel::exponential: return params[0] * std::exp(-params[1] * (position - 1.0));
        case DecayModel::power_law: return params[0] * std::pow(position, -params[1]);
        case DecayModel::linear: return params[0] - params[1] * (position - 1.0);
        case DecayModel::null: return params[0];
    }
    return 0.0;
}

double FitResult::param(std::string_view name) const {
    const auto names = parameter_names(model);
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return params[i];
    throw InputError("model " + decay_model_name(model) + " has no parameter '" +
                     std::string(name) + "'");
}

bool DecayDataset::weighted() const {
    return !rows.empty() &&
           std::all_of(rows.begin(), rows.end(), [](const DecayRow& r) { return r.se.has_value(); });
}

std::size_t DecayDataset::distinct_positions() const {
    std::set<double> seen;
    for (const auto& r : rows) seen.insert(r.position);
    return seen.size();
}

std::vector<std::string> DecayDataset::groups() const {
    std::vector<std::string> out;
    for (const auto& r : rows)
        if (r.group && std::find(out.begin(), out.end(), *r.group) == out.end()) out.push_back(*r.group);
    return out;
}

void DecayDataset::validate() const {
    const bool any_se =
        std::any_of(rows.begin(), rows.end(), [](const DecayRow& r) { return r.se.has_value(); });
    for (const auto& r : rows) {
        if (!std::isfinite(r.position) || r.position < 1.0)
            throw InputError("positions must be finite and >= 1");
        if (!std::isfinite(r.bias)) throw InputError("bias values must be finite");
        if (any_se && !r.se) throw InputError("se must be given for every row or for none");
        if (r.se && !(*r.se > 0.0 && std::isfinite(*r.se)))
            throw InputError("se must be positive and finite");
    }
    if (distinct_positions() < 3)
        throw InputError("decay fits need at least 3 distinct positions, got " +
                         std::to_string(distinct_positions()));
}

double gaussian_loglik(double weighted_rss, std::size_t rows, double sum_log_weights) {
    const double m = double(rows);
    const double sigma2 = std::max(weighted_rss / m, std::numeric_limits<double>::min());
    return -0.5 * m * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0) + 0.5 * sum_log_weights;
}

double bic(double loglik, std::size_t curve_params, std::size_t rows) {
    return double(curve_params + 1) * std::log(double(rows)) - 2.0 * loglik;
}

FitResult fit(const DecayDataset& dataset, DecayModel model) {
    dataset.validate();
    if (dataset.rows.size() < parameter_count(model) + 1)
        throw InputError("fewer rows than parameters");
    const Problem pr = make_problem(dataset);
    switch (model) {
        case DecayModel::null: return finish(pr, model, {weighted_mean(pr)});
        case DecayModel::linear: return fit_linear(pr);
        default: return fit_nonlinear(pr, model);
    }
}

const ComparisonEntry& ComparisonTable::entry(DecayModel model) const {
    for (const auto& e : entries)
        if (e.model == model) return e;
    throw InputError("comparison table has no entry for " + decay_model_name(model));
}

ComparisonTable build_comparison(std::vector<ComparisonEntry> entries) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const ComparisonEntry& a, const ComparisonEntry& b) {
                         if (a.fit.has_value() != b.fit.has_value()) return a.fit.has_value();
                         if (!a.fit) return false;
                         return a.fit->bic < b.fit->bic;
                     });
    ComparisonTable table;
    if (entries.empty() || !entries.front().fit) throw InputError("no decay model could be fitted");
    const double best = entries.front().fit->bic;
    for (auto& e : entries)
        e.delta_bic = e.fit ? e.fit->bic - best : std::numeric_limits<double>::infinity();
    table.winner = entries.front().model;
    table.entries = std::move(entries);
    return table;
}

ComparisonTable compare(const DecayDataset& dataset) {
    dataset.validate();
    std::vector<ComparisonEntry> entries;
    for (DecayModel m : kAllDecayModels) {
        ComparisonEntry e;
        e.model = m;
        try {
            e.fit = fit(dataset, m);
        } catch (const Error& err) {
            e.error = err.what();
        }
        entries.push_back(std::move(e));
    }
    return build_comparison(std::move(entries));
}

ConfidenceInterval bootstrap_ci(const DecayDataset& dataset, DecayModel model, double level,
                                std::size_t resamples, std::uint64_t seed) {
    if (!(level > 0.0 && level < 1.0)) throw InputError("CI level must lie in (0, 1)");
    if (resamples < 200) throw InputError("bootstrap needs >= 200 resamples");
    if (model == DecayModel::null) throw InputError("the null model has no decay parameter");
    dataset.validate();

    Rng rng(seed);
    const std::size_t m = dataset.rows.size();
    std::vector<double> estimates;
    estimates.reserve(resamples);
    DecayDataset sample;
    sample.rows.resize(m);
    for (std::size_t b = 0; b < resamples; ++b) {
        bool done = false;
        for (std::size_t attempt = 0; attempt < kBootstrapRetries && !done; ++attempt) {
            for (auto& row : sample.rows) row = dataset.rows[rng.below(m)];
            if (sample.distinct_positions() < 3) continue;
            try {
                estimates.push_back(fit(sample, model).params[1]);
                done = true;
            } catch (const ConvergenceError&) {
            }
        }
        if (!done) throw DegenerateError("bootstrap retry budget exhausted");
    }
    const double tail = 0.5 * (1.0 - level);
    return {stats::quantile(estimates, tail), stats::quantile(estimates, 1.0 - tail)};
}

DecayDataset exponential_dataset(double b0, double lambda, std::span<const double> positions) {
    DecayDataset ds;
    for (double p : positions) ds.rows.push_back({p, b0 * std::exp(-lambda * (p - 1.0)), {}, {}, {}});
    return ds;
}

RecoveryReport parameter_recovery(const RecoveryConfig& config) {
    if (config.n_sims < 10) throw InputError("parameter recovery needs n_sims >= 10");
    if (!(config.beta_hi >= config.beta_lo)) throw InputError("beta prior must satisfy lo <= hi");
    if (!(config.noise_sigma >= 0.0)) throw InputError("noise_sigma must be >= 0");
    RecoveryReport report;
    for (std::size_t s = 0; s < config.n_sims; ++s) {
        Rng rng(derive_seed(config.seed, s));
        const double beta = rng.uniform(config.beta_lo, config.beta_hi);
        DecayDataset ds = exponential_dataset(config.b0, beta, config.positions);
        for (auto& row : ds.rows) row.bias += rng.normal(0.0, config.noise_sigma);
        try {
            report.pairs.push_back({beta, fit(ds, DecayModel::exponential).param("lambda")});
        } catch (const ConvergenceError&) {
            ++report.excluded;
        }
    }
    if (report.pairs.empty()) throw DegenerateError("every recovery fit failed");
    std::vector<double> truth, recovered;
    double abs_err = 0.0;
    for (const auto& p : report.pairs) {
        truth.push_back(p.beta_true);
        recovered.push_back(p.beta_recovered);
        abs_err += std::abs(p.beta_true - p.beta_recovered);
    }
    report.mae = abs_err / double(report.pairs.size());
    if (report.pairs.size() >= 2) {
        const double r = stats::pearson(truth, recovered);
        if (std::isfinite(r)) report.correlation = r;
    }
    return report;
}

double loo_cv(const DecayDataset& dataset) {
    dataset.validate();
    for (const auto& r : dataset.rows)
        if (!r.group) throw InputError("leave-one-out CV needs a group label on every row");
    const auto groups = dataset.groups();
    if (groups.size() < 3) throw InputError("leave-one-out CV needs >= 3 groups");

    const bool weighted = dataset.weighted();
    std::vector<double> y, yhat, w;
    for (const auto& g : groups) {
        DecayDataset train;
        std::vector<const DecayRow*> held;
        for (const auto& r : dataset.rows) {
            if (*r.group == g) held.push_back(&r);
            else train.rows.push_back(r);
        }
        const FitResult f = fit(train, DecayModel::exponential);
        for (const DecayRow* r : held) {
            y.push_back(r->bias);
            yhat.push_back(f.predict(r->position));
            w.push_back(weighted ? 1.0 / (*r->se * *r->se) : 1.0);
        }
    }
    double sw = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sw += w[i];
        swy += w[i] * y[i];
    }
    const double ybar = swy / sw;
    double sse = 0.0, tss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sse += w[i] * (y[i] - yhat[i]) * (y[i] - yhat[i]);
        tss += w[i] * (y[i] - ybar) * (y[i] - ybar);
    }
    if (!(tss > 0.0)) throw DegenerateError("held-out data has no variance");
    return 1.0 - sse / tss;
}

}  // namespace seqbias
