#include "seqbias/predict_human.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <algorithm>
#include <cmath>

#include "seqbias/error.hpp"
#include "seqbias/stats.hpp"

namespace seqbias {

namespace {

constexpr double kZ95 = 1.96;

// 1 - exp(-x) without cancellation for small x.
double saturation(double x) { return -std::expm1(-x); }

void check_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string(name) + " must be > 0");
}

double two_sided_t_p(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

std::string group_key(const TrialRecord& r, GroupField field) {
    switch (field) {
        case GroupField::source: return r.source;
        case GroupField::item: return r.item;
        case GroupField::load: return r.load ? load_name(*r.load) : std::string("(none)");
    }
    return {};
}

}  // namespace

double default_kappa() { return 0.45 / saturation(0.0127 * 4.0); }

double predict_d(const PredictionInputs& in) {
    if (!(in.beta >= 0.0) || !std::isfinite(in.beta)) throw InputError("beta must be >= 0");
    check_positive(in.l_wm, "l_wm");
    check_positive(in.kappa, "kappa");
    return in.kappa * saturation(in.beta * in.l_wm);
}

CrossSystemPrediction map_cross_system(const PredictionInputs& in) {
    if (!in.d_llm) throw InputError("cross-system mapping needs d_llm");
    if (!(in.beta >= 0.0) || !std::isfinite(in.beta)) throw InputError("beta must be >= 0");
    check_positive(in.l_wm, "l_wm");
    check_positive(in.l_llm, "l_llm");
    if (!(in.gamma >= 0.0) || !std::isfinite(in.gamma)) throw InputError("gamma must be >= 0");
    CrossSystemPrediction out;
    if (in.beta == 0.0) {
        out.d_human = *in.d_llm * (in.l_wm / in.l_llm) * in.gamma;
        out.beta_zero_limit = true;
        return out;
    }
    out.d_human = *in.d_llm * saturation(in.beta * in.l_wm) / saturation(in.beta * in.l_llm) * in.gamma;
    return out;
}

std::string condition_name(Condition c) {
    return c == Condition::anchor_before ? "anchor_before" : "anchor_after";
}

Condition parse_condition(const std::string& s) {
    if (s == "anchor_before" || s == "before") return Condition::anchor_before;
    if (s == "anchor_after" || s == "after") return Condition::anchor_after;
    throw InputError("unknown condition '" + s + "'");
}

std::string load_name(Load l) { return l == Load::low ? "low" : "high"; }

Load parse_load(const std::string& s) {
    if (s == "low") return Load::low;
    if (s == "high") return Load::high;
    throw InputError("unknown load '" + s + "'");
}

GroupField parse_group_field(const std::string& s) {
    if (s == "source") return GroupField::source;
    if (s == "item") return GroupField::item;
    if (s == "load") return GroupField::load;
    throw InputError("cannot group by '" + s + "'");
}

double anchoring_index(const TrialRecord& r) {
    const double denom = std::abs(r.true_value - r.anchor);
    if (!(denom > 0.0)) throw InputError("true_value equals anchor; anchoring index undefined");
    return std::abs(r.estimate - r.anchor) / denom;
}

EffectReport effect_size_from_summary(const GroupSummary& g1, const GroupSummary& g2) {
    if (g1.n < 2 || g2.n < 2) throw InputError("effect size needs n >= 2 in each group");
    const double v1 = g1.sd * g1.sd, v2 = g2.sd * g2.sd;
    if (v1 == 0.0 && v2 == 0.0) throw DegenerateError("both groups have zero variance");
    const double n1 = double(g1.n), n2 = double(g2.n);

    EffectReport rep;
    rep.group1 = g1;
    rep.group2 = g2;
    const double pooled = std::sqrt(((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / (n1 + n2 - 2.0));
    rep.d = (g1.mean - g2.mean) / pooled;
    rep.se = std::sqrt((n1 + n2) / (n1 * n2) + rep.d * rep.d / (2.0 * (n1 + n2)));
    rep.ci_lo = rep.d - kZ95 * rep.se;
    rep.ci_hi = rep.d + kZ95 * rep.se;

    const double a = v1 / n1, b = v2 / n2;
    rep.t = (g1.mean - g2.mean) / std::sqrt(a + b);
    rep.df = (a + b) * (a + b) / (a * a / (n1 - 1.0) + b * b / (n2 - 1.0));
    rep.p_value = two_sided_t_p(rep.t, rep.df);
    return rep;
}

EffectReport effect_size(std::span<const double> group1, std::span<const double> group2) {
    if (group1.size() < 2 || group2.size() < 2)
        throw InputError("effect size needs n >= 2 in each group");
    const GroupSummary g1{stats::mean(group1), stats::sample_sd(group1), group1.size()};
    const GroupSummary g2{stats::mean(group2), stats::sample_sd(group2), group2.size()};
    return effect_size_from_summary(g1, g2);
}

Correlation correlate(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw ShapeError("correlate: samples differ in length");
    if (xs.size() < 4) throw InputError("correlate needs n >= 4");
    const double r = stats::pearson(xs, ys);
    if (!std::isfinite(r)) throw DegenerateError("correlate: zero variance");
    Correlation c;
    c.r = r;
    c.n = xs.size();
    const double n = double(xs.size());
    if (std::abs(r) == 1.0) {
        c.ci_lo = c.ci_hi = r;
        c.p_value = 0.0;
        return c;
    }
    const double z = std::atanh(r);
    const double half = kZ95 / std::sqrt(n - 3.0);
    c.ci_lo = std::tanh(z - half);
    c.ci_hi = std::tanh(z + half);
    c.p_value = two_sided_t_p(r * std::sqrt((n - 2.0) / (1.0 - r * r)), n - 2.0);
    return c;
}

EffectReport position_effect(std::span<const TrialRecord> records) {
    std::vector<double> before, after;
    for (const auto& r : records)
        (r.condition == Condition::anchor_before ? before : after).push_back(anchoring_index(r));
    return effect_size(after, before);
}

std::vector<GroupEffect> grouped_effects(std::span<const TrialRecord> records, GroupField group_by) {
    std::vector<std::string> order;
    for (const auto& r : records) {
        const std::string key = group_key(r, group_by);
        if (std::find(order.begin(), order.end(), key) == order.end()) order.push_back(key);
    }
    std::vector<GroupEffect> out;
    for (const auto& key : order) {
        std::vector<TrialRecord> members;
        std::size_t n_before = 0, n_after = 0;
        for (const auto& r : records) {
            if (group_key(r, group_by) != key) continue;
            members.push_back(r);
            (r.condition == Condition::anchor_before ? n_before : n_after) += 1;
        }
        GroupEffect g;
        g.group = key;
        if (n_before < 2 || n_after < 2) {
            g.flag = "needs >= 2 trials per condition (anchor_before " + std::to_string(n_before) +
                     ", anchor_after " + std::to_string(n_after) + ")";
        } else {
            try {
                g.report = position_effect(members);
            } catch (const Error& e) {
                g.flag = e.what();
            }
        }
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace seqbias
