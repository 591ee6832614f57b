#include "seqbias/cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <deque>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include "seqbias/bias_metrics.hpp"
#include "seqbias/debias.hpp"
#include "seqbias/decay_fit.hpp"
#include "seqbias/error.hpp"
#include "seqbias/fixtures.hpp"
#include "seqbias/io.hpp"
#include "seqbias/predict_human.hpp"
#include "seqbias/privilege.hpp"
#include "seqbias/rng.hpp"

namespace seqbias::cli {

using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "seqbias 0.1.0";

// Seed tags for sub-streams derived from a run's base seed.
constexpr std::uint64_t kInputsTag = 0x1001;
constexpr std::uint64_t kPrimacyTag = 0x2001;
constexpr std::uint64_t kAnchorTag = 0x2002;
constexpr std::uint64_t kExactTag = 0x3001;
constexpr std::uint64_t kMonteCarloTag = 0x3002;

// ---------------------------------------------------------------------------
// Option registry: defaults, then JSON config file, then explicit flags.

enum class Kind { integer, real, text, flag, int_list, optional_real };

class Options {
public:
    explicit Options(CLI::App* app) : app_(app) {
        app_->add_option("--config", config_path_, "JSON config file or manifest of an earlier run");
    }

    Options& integer(const std::string& key, long fallback, const std::string& help) {
        return add(key, Kind::integer, fallback, help);
    }
    Options& real(const std::string& key, double fallback, const std::string& help) {
        return add(key, Kind::real, fallback, help);
    }
    Options& optional_real(const std::string& key, const std::string& help) {
        return add(key, Kind::optional_real, nullptr, help);
    }
    Options& text(const std::string& key, const std::string& fallback, const std::string& help) {
        return add(key, Kind::text, fallback, help);
    }
    Options& flag(const std::string& key, const std::string& help) {
        Entry& e = entries_.emplace_back(Entry{key, Kind::flag, false, {}, false, nullptr});
        e.option = app_->add_flag(flag_name(key), e.flag_value, help);
        return *this;
    }
    Options& int_list(const std::string& key, std::vector<long> fallback, const std::string& help) {
        return add(key, Kind::int_list, json(fallback), help);
    }
    // A flag that sets `key` to `value`, e.g. --uniform for mode = "uniform".
    Options& alias(const std::string& name, const std::string& key, json value, const std::string& help) {
        Alias& a = aliases_.emplace_back(Alias{key, std::move(value), false, nullptr});
        a.option = app_->add_flag("--" + name, a.set, help);
        return *this;
    }

    json resolve(const std::string& command) const {
        json cfg = json::object();
        for (const Entry& e : entries_) cfg[e.key] = e.fallback;

        if (!config_path_.empty()) {
            json file;
            try {
                file = json::parse(io::read_file(config_path_));
            } catch (const json::parse_error& ex) {
                throw ParseError(std::string("config file: ") + ex.what(), 1);
            }
            if (!file.is_object()) throw ConfigError("config", "config file must hold a JSON object");
            if (file.contains("config") && file.contains("command")) {
                if (file["command"] != command)
                    throw ConfigError("command", "manifest was written by '" +
                                                     file["command"].get<std::string>() + "'");
                file = file["config"];
            }
            for (auto it = file.begin(); it != file.end(); ++it) {
                const Entry* e = find(it.key());
                if (!e) throw ConfigError(it.key(), "unknown option for '" + command + "'");
                cfg[e->key] = coerce(*e, it.value());
            }
        }
        for (const Alias& a : aliases_)
            if (a.set) cfg[a.key] = a.value;
        for (const Entry& e : entries_) {
            if (!e.option || e.option->count() == 0) continue;
            cfg[e.key] = e.kind == Kind::flag ? json(e.flag_value) : parse_raw(e, e.raw);
        }
        return cfg;
    }

private:
    struct Entry {
        std::string key;
        Kind kind;
        json fallback;
        std::string raw;
        bool flag_value = false;
        CLI::Option* option = nullptr;
    };
    struct Alias {
        std::string key;
        json value;
        bool set = false;
        CLI::Option* option = nullptr;
    };

    static std::string flag_name(std::string key) {
        for (char& c : key)
            if (c == '_') c = '-';
        return "--" + key;
    }

    Options& add(const std::string& key, Kind kind, json fallback, const std::string& help) {
        Entry& e = entries_.emplace_back(Entry{key, kind, std::move(fallback), {}, false, nullptr});
        e.option = app_->add_option(flag_name(key), e.raw, help);
        return *this;
    }

    const Entry* find(const std::string& key) const {
        for (const Entry& e : entries_)
            if (e.key == key) return &e;
        return nullptr;
    }

    static long parse_long(const std::string& key, const std::string& s) {
        long v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
            throw ConfigError(key, "expected an integer, got '" + s + "'");
        return v;
    }

    static double parse_real(const std::string& key, const std::string& s) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v))
            throw ConfigError(key, "expected a number, got '" + s + "'");
        return v;
    }

    static json parse_raw(const Entry& e, const std::string& s) {
        switch (e.kind) {
            case Kind::integer: return parse_long(e.key, s);
            case Kind::real:
            case Kind::optional_real: return parse_real(e.key, s);
            case Kind::text: return s;
            case Kind::int_list: {
                std::vector<long> out;
                std::stringstream ss(s);
                for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_long(e.key, item));
                return out;
            }
            case Kind::flag: return s == "true" || s == "1";
        }
        return nullptr;
    }

    static json coerce(const Entry& e, const json& v) {
        switch (e.kind) {
            case Kind::integer:
                if (!v.is_number_integer()) throw ConfigError(e.key, "expected an integer");
                return v;
            case Kind::real:
                if (!v.is_number()) throw ConfigError(e.key, "expected a number");
                return v.get<double>();
            case Kind::optional_real:
                if (v.is_null()) return v;
                if (!v.is_number()) throw ConfigError(e.key, "expected a number or null");
                return v.get<double>();
            case Kind::text:
                if (!v.is_string()) throw ConfigError(e.key, "expected a string");
                return v;
            case Kind::flag:
                if (!v.is_boolean()) throw ConfigError(e.key, "expected true or false");
                return v;
            case Kind::int_list:
                if (v.is_string()) return parse_raw(e, v.get<std::string>());
                if (!v.is_array()) throw ConfigError(e.key, "expected an array of integers");
                for (const auto& x : v)
                    if (!x.is_number_integer()) throw ConfigError(e.key, "expected an array of integers");
                return v;
        }
        return v;
    }

    CLI::App* app_;
    std::string config_path_;
    std::deque<Entry> entries_;
    std::deque<Alias> aliases_;
};

// ---------------------------------------------------------------------------

struct Context {
    std::ostream& out;
    std::ostream& err;
    std::filesystem::path out_dir;

    std::string path(const std::string& name) const { return (out_dir / name).string(); }

    void write(const std::string& name, const std::string& contents) const {
        io::write_file(path(name), contents);
    }
};

std::size_t positive(const json& cfg, const std::string& key) {
    const long v = cfg.at(key).get<long>();
    if (v < 1) throw ConfigError(key, "must be >= 1");
    return static_cast<std::size_t>(v);
}

std::uint64_t seed_of(const json& cfg, const std::string& key = "seed") {
    const long v = cfg.at(key).get<long>();
    if (v < 0) throw ConfigError(key, "must be >= 0");
    return static_cast<std::uint64_t>(v);
}

void add_model_options(Options& o, long seq_default) {
    o.integer("layers", 2, "number of transformer layers")
        .integer("heads", 2, "attention heads per layer")
        .integer("vocab", 16, "vocabulary size")
        .integer("dim", 16, "model dimension")
        .integer("seq", seq_default, "sequence length")
        .text("mask", "causal", "causal | windowed | bidirectional")
        .integer("window", 4, "window size for the windowed mask")
        .real("qk_scale", 0.25, "query/key init multiplier");
}

ToyModelConfig model_config(const json& cfg, std::uint64_t seed) {
    ToyModelConfig c;
    c.layers = positive(cfg, "layers");
    c.heads = positive(cfg, "heads");
    c.vocab_size = positive(cfg, "vocab");
    c.model_dim = positive(cfg, "dim");
    c.max_seq = std::max<std::size_t>(2, positive(cfg, "seq"));
    const MaskKind kind = parse_mask_kind(cfg.at("mask").get<std::string>());
    c.mask = kind == MaskKind::windowed   ? AttentionMask::windowed(positive(cfg, "window"))
             : kind == MaskKind::causal   ? AttentionMask::causal()
                                          : AttentionMask::bidirectional();
    c.qk_scale = cfg.at("qk_scale").get<double>();
    c.seed = seed;
    c.validate();
    return c;
}

json config_json(const ToyModelConfig& c) {
    return {{"layers", c.layers},
            {"heads", c.heads},
            {"vocab_size", c.vocab_size},
            {"model_dim", c.model_dim},
            {"max_seq", c.max_seq},
            {"mask", mask_kind_name(c.mask.kind)},
            {"window", c.mask.window},
            {"positional_encoding", c.positional_encoding},
            {"qk_scale", c.qk_scale},
            {"seed", c.seed}};
}

json effect_json(const EffectReport& r, const std::string& label1, const std::string& label2) {
    auto summary = [](const GroupSummary& g) { return json{{"mean", g.mean}, {"sd", g.sd}, {"n", g.n}}; };
    return {{"d", r.d},
            {"ci", {r.ci_lo, r.ci_hi}},
            {"se", r.se},
            {"t", r.t},
            {"df", r.df},
            {"p_value", r.p_value},
            {"groups", {{label1, summary(r.group1)}, {label2, summary(r.group2)}}}};
}

// ---------------------------------------------------------------------------
// privilege

int cmd_privilege(const json& cfg, const Context& ctx) {
    const std::string mode = cfg.at("mode").get<std::string>();
    const std::size_t n = positive(cfg, "seq");
    const std::size_t layers = positive(cfg, "layers");
    json report = {{"command", "privilege"}, {"mode", mode}};

    PrivilegeProfile profile;
    std::string applicability = "causal";
    std::size_t check_len = n;
    if (mode == "uniform") {
        profile = privilege_uniform(layers, n);
    } else if (mode == "empirical") {
        const ToyModelConfig mc = model_config(cfg, seed_of(cfg));
        const ToyModel model(mc);
        const auto inputs = random_sequences(positive(cfg, "samples"), n, mc.vocab_size,
                                             derive_seed(mc.seed, kInputsTag));
        profile = privilege_empirical(model, inputs);
        report["model"] = config_json(mc);
        report["num_samples"] = profile.num_samples;
        if (mc.mask.kind == MaskKind::bidirectional) {
            applicability = "not_applicable";
        } else if (mc.mask.kind == MaskKind::windowed) {
            applicability = "window";
            check_len = std::min(n, mc.mask.window);
        }
    } else {
        throw ConfigError("mode", "expected 'uniform' or 'empirical'");
    }

    io::TsvTable tsv{{"position", "phi"}, {}};
    for (std::size_t j = 0; j < profile.phi.size(); ++j)
        tsv.add_row({std::to_string(j + 1), io::format_double(profile.phi[j])});
    ctx.write("privilege.tsv", tsv.str());

    report["layers"] = profile.layers;
    report["seq_len"] = profile.seq_len;
    report["phi"] = profile.phi;

    bool violated = false;
    json mono;
    if (applicability == "not_applicable") {
        mono = {{"status", "not_applicable"},
                {"reason", "bidirectional attention violates the causal-mask assumption"}};
    } else {
        PrivilegeProfile scoped = profile;
        scoped.phi.resize(check_len);
        const MonotonicityReport m = check_monotonicity(scoped);
        violated = !m.holds;
        mono = {{"status", m.holds ? "holds" : "violated"},
                {"scope", applicability == "window" ? "first window positions" : "all positions"},
                {"positions_checked", check_len},
                {"first_violation", m.first_violation ? json(*m.first_violation) : json(nullptr)}};
    }
    report["monotonicity"] = mono;

    if (n >= 2) {
        const double gap = privilege_gap(profile);
        const double reference = double(profile.layers) * std::log(double(n));
        report["gap"] = {{"value", gap}, {"l_ln_n", reference}, {"ratio", gap / reference}};
    }
    const std::string text = io::dump_json(report);
    ctx.write("report.json", text);
    ctx.out << text;
    return violated ? kScientificFailure : kOk;
}

// ---------------------------------------------------------------------------
// theorems

Sequence non_palindromic_sequence(std::size_t n, std::size_t vocab, Rng& rng) {
    Sequence s(n);
    do {
        for (Token& t : s) t = static_cast<Token>(rng.below(vocab));
    } while (n >= 2 && std::equal(s.begin(), s.end(), s.rbegin()));
    return s;
}

Sequence distinct_tokens(std::size_t n, std::size_t vocab, Rng& rng) {
    std::vector<std::size_t> pool = random_permutation(vocab, rng);
    Sequence s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<Token>(pool[i % vocab]);
    return s;
}

int cmd_theorems(const json& cfg, const Context& ctx) {
    const std::size_t seeds = positive(cfg, "seeds");
    const std::size_t n = positive(cfg, "seq");
    const std::uint64_t base = seed_of(cfg);
    if (n < 2) throw ConfigError("seq", "theorem sweeps need seq >= 2");
    json report = {{"command", "theorems"}, {"seeds", seeds}};
    bool all_pass = true;

    // Theorem 1: reversal changes the output.
    {
        json per_seed = json::array();
        std::size_t witnesses = 0;
        Sequence first_input;
        for (std::size_t s = 0; s < seeds; ++s) {
            const ToyModelConfig mc = model_config(cfg, base + s);
            const ToyModel model(mc);
            Rng rng(derive_seed(base + s, kPrimacyTag));
            const Sequence x = non_palindromic_sequence(n, mc.vocab_size, rng);
            if (s == 0) first_input = x;
            const PrimacyReport r = primacy_bias(model, x);
            const bool witness = r.tv_distance > 1e-6;
            witnesses += witness ? 1 : 0;
            per_seed.push_back({{"seed", base + s}, {"input", x}, {"tv_distance", r.tv_distance},
                                {"max_abs_diff", r.max_abs_diff}, {"witness", witness}});
        }
        ToyModelConfig contrast_cfg = model_config(cfg, base);
        contrast_cfg.mask = AttentionMask::bidirectional();
        contrast_cfg.positional_encoding = false;
        const double contrast_tv = primacy_bias(ToyModel(contrast_cfg), first_input).tv_distance;
        const std::size_t required = (99 * seeds + 99) / 100;
        const bool pass = witnesses >= required && contrast_tv <= 1e-7;
        all_pass = all_pass && pass;
        report["theorem1"] = {{"claim", "reversal changes the output distribution"},
                              {"pass", pass},
                              {"witnesses", witnesses},
                              {"required", required},
                              {"tv_threshold", 1e-6},
                              {"contrast_bidirectional_content_only_tv", contrast_tv},
                              {"contrast_threshold", 1e-7},
                              {"per_seed", per_seed}};
    }

    // Theorem 2: anchors carry information into the estimate.
    {
        const std::size_t anchors = positive(cfg, "anchors");
        json per_seed = json::array();
        bool every_positive = true, every_bounded = true;
        for (std::size_t s = 0; s < seeds; ++s) {
            const ToyModelConfig mc = model_config(cfg, base + s);
            if (anchors < 2 || anchors > mc.vocab_size)
                throw ConfigError("anchors", "must lie in [2, vocab]");
            const ToyModel model(mc);
            Rng rng(derive_seed(base + s, kAnchorTag));
            AnchorProbe probe;
            probe.anchor_slot = 0;
            probe.query = non_palindromic_sequence(n, mc.vocab_size, rng);
            const auto order = random_permutation(mc.vocab_size, rng);
            for (std::size_t a = 0; a < anchors; ++a) probe.anchor_values.push_back(static_cast<Token>(order[a]));
            const MiEstimate mi = anchor_mutual_information(model, probe);
            const double bound = std::log(double(std::min(mc.vocab_size, anchors)));
            every_positive = every_positive && mi.nats > 0.0;
            every_bounded = every_bounded && mi.nats <= bound;
            per_seed.push_back({{"seed", base + s},
                                {"mi_nats", mi.nats},
                                {"upper_bound_nats", bound},
                                {"mean_anchor_attention", mean_anchor_attention(model, probe)},
                                {"slope", anchoring_slope(model, probe)}});
        }
        const double worked = imin_bound(32, 0.05, 2);
        const bool pass = every_positive && every_bounded && worked == 3.2;
        all_pass = all_pass && pass;
        report["theorem2"] = {{"claim", "anchor mutual information is strictly positive"},
                              {"pass", pass},
                              {"all_positive", every_positive},
                              {"all_within_ln_anchor_count", every_bounded},
                              {"imin_bound_L32_A0.05_H2", worked},
                              {"per_seed", per_seed}};
    }

    // Theorem 3: exact marginalization is factorial, Monte Carlo converges.
    {
        json block = {{"claim", "exact debiasing needs n! passes; Monte Carlo error ~ C/sqrt(k)"}};
        const bool use_seq = cfg.at("exact").get<bool>();
        const std::size_t exact_n = use_seq ? n : positive(cfg, "exact_seq");
        const ToyModelConfig mc = [&] {
            json c = cfg;
            c["seq"] = std::max<long>(long(std::max(exact_n, positive(cfg, "mc_seq"))), long(n));
            return model_config(c, base);
        }();
        const ToyModel model(mc);
        bool exact_pass = true;
        Rng rng(derive_seed(base, kExactTag));
        const Sequence x = distinct_tokens(exact_n, mc.vocab_size, rng);
        try {
            const MarginalizedDistribution ref = marginalize_exact(model, x);
            double worst = 0.0;
            std::size_t checked = 0;
            std::vector<std::size_t> sigma(exact_n);
            std::iota(sigma.begin(), sigma.end(), std::size_t{0});
            auto check = [&](const std::vector<std::size_t>& perm) {
                Sequence px(exact_n);
                for (std::size_t i = 0; i < exact_n; ++i) px[i] = x[perm[i]];
                worst = std::max(worst, max_abs_difference(marginalize_exact(model, px).probs, ref.probs));
                ++checked;
            };
            if (exact_n <= 6) {
                do check(sigma);
                while (std::next_permutation(sigma.begin(), sigma.end()));
            } else {
                for (int r = 0; r < 8; ++r) check(random_permutation(exact_n, rng));
            }
            const bool counter_ok = ref.forward_passes == factorial(exact_n);
            exact_pass = worst <= 1e-10 && counter_ok && ref.per_permutation_std <= 0.5;
            block["exact"] = {{"n", exact_n},
                              {"input", x},
                              {"forward_passes", ref.forward_passes},
                              {"n_factorial", factorial(exact_n)},
                              {"pre_permutations_checked", checked},
                              {"max_invariance_deviation", worst},
                              {"tolerance", 1e-10},
                              {"per_permutation_std", ref.per_permutation_std},
                              {"probs", ref.probs},
                              {"pass", exact_pass}};
        } catch (const RefusalError& e) {
            block["exact"] = {{"n", exact_n}, {"refused", true}, {"cost_forward_passes", e.cost()},
                              {"message", e.what()}};
        }

        const std::size_t mc_n = positive(cfg, "mc_seq");
        std::vector<std::size_t> ks;
        for (long k : cfg.at("ks").get<std::vector<long>>()) {
            if (k < 1) throw ConfigError("ks", "k values must be >= 1");
            ks.push_back(static_cast<std::size_t>(k));
        }
        Rng mc_rng(derive_seed(base, kMonteCarloTag));
        const Sequence mx = distinct_tokens(mc_n, mc.vocab_size, mc_rng);
        const ConvergenceCurve curve =
            mc_convergence(model, mx, ks, positive(cfg, "repeats"), derive_seed(base, kMonteCarloTag + 1));
        bool within_bound = true;
        json points = json::array();
        io::TsvTable tsv{{"k", "mean_residual", "bound_half_over_sqrt_k"}, {}};
        for (const auto& p : curve.points) {
            const double bound = 0.5 / std::sqrt(double(p.k));
            tsv.add_row({std::to_string(p.k), io::format_double(p.mean_residual), io::format_double(bound)});
            within_bound = within_bound && p.mean_residual <= bound;
            points.push_back({{"k", p.k}, {"mean_residual", p.mean_residual}, {"repeats", p.repeats},
                              {"bound_half_over_sqrt_k", bound}});
        }
        ctx.write("convergence.tsv", tsv.str());
        const bool slope_ok = curve.slope_loglog >= -0.65 && curve.slope_loglog <= -0.35;
        const bool mc_pass = slope_ok && within_bound && curve.c_empirical <= 0.5;
        block["monte_carlo"] = {{"n", mc_n},
                                {"input", mx},
                                {"points", points},
                                {"slope_loglog", curve.slope_loglog},
                                {"slope_range", {-0.65, -0.35}},
                                {"c_empirical", curve.c_empirical},
                                {"samples_for_c0.5_eps0.01", samples_for_tolerance(0.5, 0.01)},
                                {"pass", mc_pass}};
        const bool pass = exact_pass && mc_pass;
        block["pass"] = pass;
        all_pass = all_pass && pass;
        report["theorem3"] = block;
    }

    report["all_pass"] = all_pass;
    const std::string text = io::dump_json(report);
    ctx.write("report.json", text);
    ctx.out << text;
    return all_pass ? kOk : kScientificFailure;
}

// ---------------------------------------------------------------------------
// fit

json fit_json(const ComparisonEntry& e) {
    json j = {{"model", decay_model_name(e.model)}};
    if (!e.fit) {
        j["error"] = e.error;
        return j;
    }
    json params = json::object();
    const auto names = parameter_names(e.model);
    for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = e.fit->params[i];
    j["params"] = params;
    j["r_squared"] = e.fit->r_squared;
    j["loglik"] = e.fit->loglik;
    j["bic"] = e.fit->bic;
    j["delta_bic"] = e.delta_bic;
    return j;
}

int cmd_fit(const json& cfg, const Context& ctx) {
    json report = {{"command", "fit"}};
    if (cfg.at("simulate").get<bool>()) {
        RecoveryConfig rc;
        rc.n_sims = positive(cfg, "n");
        rc.beta_lo = cfg.at("beta_lo").get<double>();
        rc.beta_hi = cfg.at("beta_hi").get<double>();
        rc.noise_sigma = cfg.at("noise").get<double>();
        rc.b0 = cfg.at("b0").get<double>();
        rc.seed = seed_of(cfg);
        rc.positions.clear();
        for (long p : cfg.at("positions").get<std::vector<long>>()) rc.positions.push_back(double(p));
        const RecoveryReport rec = parameter_recovery(rc);
        io::TsvTable tsv{{"beta_true", "beta_recovered"}, {}};
        for (const auto& p : rec.pairs)
            tsv.add_row({io::format_double(p.beta_true), io::format_double(p.beta_recovered)});
        ctx.write("recovery.tsv", tsv.str());
        report["recovery"] = {{"n_sims", rc.n_sims},
                              {"correlation", rec.correlation ? json(*rec.correlation) : json(nullptr)},
                              {"mae", rec.mae},
                              {"excluded", rec.excluded},
                              {"beta_prior", {rc.beta_lo, rc.beta_hi}},
                              {"noise_sigma", rc.noise_sigma}};
        const std::string text = io::dump_json(report);
        ctx.write("recovery.json", text);
        ctx.out << text;
        return kOk;
    }

    DecayDataset ds;
    const std::string fixture = cfg.at("fixture").get<std::string>();
    const std::string data = cfg.at("data").get<std::string>();
    if (!fixture.empty()) {
        if (fixture != "fig2") throw ConfigError("fixture", "fit supports the 'fig2' fixture");
        ds = fixtures::fig2();
        report["dataset"] = "fixture:fig2";
    } else if (!data.empty()) {
        ds = io::read_decay_csv(data);
        report["dataset"] = data;
    } else {
        throw ConfigError("data", "give --data <csv> or --fixture fig2");
    }

    const ComparisonTable table = compare(ds);
    json entries = json::array();
    for (const auto& e : table.entries) entries.push_back(fit_json(e));
    report["weighted"] = ds.weighted();
    report["rows"] = ds.rows.size();
    report["models"] = entries;
    report["winner"] = decay_model_name(table.winner);
    if (table.entries.size() > 1 && table.entries[1].fit)
        report["runner_up_delta_bic"] = table.entries[1].delta_bic;

    const double level = cfg.at("level").get<double>();
    const std::size_t resamples = positive(cfg, "resamples");
    try {
        const ConfidenceInterval ci = bootstrap_ci(ds, DecayModel::exponential, level, resamples, seed_of(cfg));
        report["lambda_ci"] = {{"lo", ci.lo}, {"hi", ci.hi}, {"level", level}, {"resamples", resamples},
                               {"method", "percentile bootstrap over rows"}};
    } catch (const Error& e) {
        report["lambda_ci"] = {{"error", e.what()}};
    }
    if (ds.groups().size() >= 3) {
        try {
            report["loo_cv_r_squared"] = loo_cv(ds);
        } catch (const Error& e) {
            report["loo_cv_error"] = e.what();
        }
    }

    double lo = ds.rows.front().position, hi = lo;
    for (const auto& r : ds.rows) {
        lo = std::min(lo, r.position);
        hi = std::max(hi, r.position);
    }
    io::TsvTable curve{{"position"}, {}};
    for (DecayModel m : kAllDecayModels) curve.header.push_back(decay_model_name(m));
    const std::size_t steps = 100;
    for (std::size_t s = 0; s <= steps; ++s) {
        const double p = lo + (hi - lo) * double(s) / double(steps);
        std::vector<std::string> row = {io::format_double(p)};
        for (DecayModel m : kAllDecayModels) {
            const auto& e = table.entry(m);
            row.push_back(e.fit ? io::format_double(e.fit->predict(p)) : "nan");
        }
        curve.add_row(std::move(row));
    }
    ctx.write("curve.tsv", curve.str());

    const std::string text = io::dump_json(report);
    ctx.write("comparison.json", text);
    ctx.out << text;
    return kOk;
}

// ---------------------------------------------------------------------------
// predict

int cmd_predict(const json& cfg, const Context& ctx) {
    PredictionInputs in;
    in.beta = cfg.at("beta").get<double>();
    in.l_wm = cfg.at("lwm").get<double>();
    in.l_llm = cfg.at("lllm").get<double>();
    in.gamma = cfg.at("gamma").get<double>();
    in.kappa = cfg.at("kappa").is_null() ? default_kappa() : cfg.at("kappa").get<double>();
    if (!cfg.at("d_llm").is_null()) in.d_llm = cfg.at("d_llm").get<double>();

    const double d = predict_d(in);
    const bool inside = d >= kPredictedBandLo && d <= kPredictedBandHi;
    json report = {{"command", "predict"},
                   {"inputs", {{"beta", in.beta}, {"l_wm", in.l_wm}, {"kappa", in.kappa}}},
                   {"d_predicted", d},
                   {"band", {kPredictedBandLo, kPredictedBandHi}},
                   {"inside_band", inside},
                   {"verdict", inside ? "inside paper band" : "outside paper band"}};
    if (in.d_llm) {
        const CrossSystemPrediction m = map_cross_system(in);
        report["cross_system"] = {{"d_llm", *in.d_llm}, {"l_llm", in.l_llm}, {"gamma", in.gamma},
                                  {"d_human", m.d_human}, {"beta_zero_limit", m.beta_zero_limit}};
    }
    const std::string text = io::dump_json(report);
    ctx.write("report.json", text);
    ctx.out << text;
    return kOk;
}

// ---------------------------------------------------------------------------
// analyze

int cmd_analyze(const json& cfg, const Context& ctx) {
    io::TrialParseResult parsed;
    const std::string fixture = cfg.at("fixture").get<std::string>();
    const std::string trials = cfg.at("trials").get<std::string>();
    json report = {{"command", "analyze"}};
    if (!fixture.empty()) {
        if (fixture != "table4") throw ConfigError("fixture", "analyze supports the 'table4' fixture");
        parsed.records = fixtures::table4_trials();
        parsed.data_rows = parsed.records.size();
        report["dataset"] = "fixture:table4";
    } else if (!trials.empty()) {
        parsed = io::read_trial_csv(trials);
        report["dataset"] = trials;
    } else {
        throw ConfigError("trials", "give --trials <csv> or --fixture table4");
    }

    json diagnostics = json::array();
    for (const auto& d : parsed.diagnostics) {
        diagnostics.push_back({{"line", d.line}, {"message", d.message}});
        ctx.err << "rejected " << d.message << '\n';
    }
    report["rows"] = parsed.data_rows;
    report["accepted"] = parsed.records.size();
    report["rejected"] = diagnostics;
    if (parsed.invalid_fraction() > io::kMaxInvalidTrialFraction) {
        ctx.err << "aborting: " << parsed.diagnostics.size() << " of " << parsed.data_rows
                << " rows invalid (limit 5%)\n";
        return kIoOrParse;
    }

    io::TsvTable ai_tsv{{"record", "source", "item", "condition", "load", "ai"}, {}};
    std::vector<double> cov, cov_ai;
    for (std::size_t i = 0; i < parsed.records.size(); ++i) {
        const auto& r = parsed.records[i];
        const double ai = anchoring_index(r);
        ai_tsv.add_row({std::to_string(i + 1), r.source, r.item, condition_name(r.condition),
                        r.load ? load_name(*r.load) : "", io::format_double(ai)});
        if (r.covariate) {
            cov.push_back(*r.covariate);
            cov_ai.push_back(ai);
        }
    }
    ctx.write("ai.tsv", ai_tsv.str());

    try {
        report["position_effect"] = effect_json(position_effect(parsed.records), "anchor_after", "anchor_before");
    } catch (const Error& e) {
        report["position_effect"] = {{"error", e.what()}};
    }
    if (cov.size() >= 4) {
        try {
            const Correlation c = correlate(cov, cov_ai);
            report["covariate_correlation"] = {{"r", c.r}, {"ci", {c.ci_lo, c.ci_hi}},
                                               {"p_value", c.p_value}, {"n", c.n}};
        } catch (const Error& e) {
            report["covariate_correlation"] = {{"error", e.what()}};
        }
    }
    const std::string group_by = cfg.at("group_by").get<std::string>();
    if (!group_by.empty()) {
        json groups = json::array();
        for (const auto& g : grouped_effects(parsed.records, parse_group_field(group_by))) {
            json j = {{"group", g.group}};
            if (g.report) j["effect"] = effect_json(*g.report, "anchor_after", "anchor_before");
            else j["flag"] = g.flag;
            groups.push_back(j);
        }
        report["group_by"] = group_by;
        report["grouped_effects"] = groups;
    }
    report["effect_convention"] =
        "d = (mean AI anchor_after - mean AI anchor_before) / pooled SD; positive means stronger "
        "anchoring when the anchor comes first";

    const std::string text = io::dump_json(report);
    ctx.write("report.json", text);
    ctx.out << text;
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Positional-bias laboratory for autoregressive sequence models", "seqbias"};
    app.require_subcommand(1);
    std::string out_dir = "seqbias-out";

    using Command = std::function<int(const json&, const Context&)>;
    struct Registered {
        std::string name;
        CLI::App* app;
        std::unique_ptr<Options> options;
        Command run;
    };
    std::vector<Registered> commands;
    auto add = [&](const std::string& name, const std::string& help, Command fn) -> Options& {
        CLI::App* sub = app.add_subcommand(name, help);
        auto opts = std::make_unique<Options>(sub);
        opts->text("out_dir", "seqbias-out", "directory for report, plot data and manifest");
        Options& ref = *opts;
        commands.push_back({name, sub, std::move(opts), std::move(fn)});
        return ref;
    };

    {
        Options& o = add("privilege", "positional privilege profile", cmd_privilege);
        add_model_options(o, 8);
        o.text("mode", "uniform", "uniform | empirical")
            .alias("uniform", "mode", "uniform", "closed-form profile under uniform attention")
            .alias("empirical", "mode", "empirical", "profile measured on the toy model")
            .integer("seed", 7, "model seed")
            .integer("samples", 64, "random input sequences for the expectation");
    }
    {
        Options& o = add("theorems", "sweep the three impossibility results", cmd_theorems);
        add_model_options(o, 8);
        o.integer("seeds", 100, "models per sweep")
            .integer("seed", 0, "base seed")
            .integer("anchors", 8, "anchor values per probe")
            .flag("exact", "run exact marginalization at --seq")
            .integer("exact_seq", 5, "length for exact marginalization without --exact")
            .integer("mc_seq", 5, "length for the Monte Carlo convergence run")
            .int_list("ks", {16, 64, 256, 1024}, "Monte Carlo sample sizes")
            .integer("repeats", 50, "Monte Carlo repeats per k");
    }
    {
        Options& o = add("fit", "decay-model comparison or parameter recovery", cmd_fit);
        o.text("data", "", "decay CSV (position,bias[,se,group,n_obs])")
            .text("fixture", "", "bundled dataset: fig2")
            .flag("simulate", "run the parameter-recovery simulation instead")
            .integer("n", 100, "recovery simulations")
            .real("beta_lo", 0.05, "lower edge of the decay prior")
            .real("beta_hi", 0.25, "upper edge of the decay prior")
            .real("noise", 2.5, "Gaussian noise SD in the recovery simulation")
            .real("b0", 48.0, "amplitude in the recovery simulation")
            .int_list("positions", {1, 2, 3, 4, 5, 6, 7, 8}, "positions in the recovery simulation")
            .integer("resamples", 1000, "bootstrap resamples")
            .real("level", 0.95, "bootstrap CI level")
            .integer("seed", 0, "seed for bootstrap and simulation");
    }
    {
        Options& o = add("predict", "effect-size predictions", cmd_predict);
        o.real("beta", 0.0127, "decay parameter")
            .real("lwm", 4.0, "working-memory depth")
            .optional_real("kappa", "scaling constant (default: band midpoint calibration)")
            .real("lllm", 32.0, "LLM depth for the cross-system mapping")
            .real("gamma", 1.2, "cross-system correction")
            .optional_real("d_llm", "LLM effect size to map onto humans");
    }
    {
        Options& o = add("analyze", "anchoring-index statistics for trial data", cmd_analyze);
        o.text("trials", "", "trial CSV")
            .text("fixture", "", "bundled trials: table4")
            .text("group_by", "", "source | item | load");
    }
    CLI::App* fixture_cmd = app.add_subcommand("fixture", "print a bundled fixture as CSV");
    std::string fixture_name;
    fixture_cmd->add_option("name", fixture_name, "fig2 | table3 | table4")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kPrecondition;
    }

    try {
        if (fixture_cmd->parsed()) {
            out << fixtures::fixture_csv(fixture_name);
            return kOk;
        }
        for (auto& c : commands) {
            if (!c.app->parsed()) continue;
            const json cfg = c.options->resolve(c.name);
            Context ctx{out, err, cfg.at("out_dir").get<std::string>()};
            std::error_code ec;
            std::filesystem::create_directories(ctx.out_dir, ec);
            if (ec) throw IoError("cannot create '" + ctx.out_dir.string() + "': " + ec.message());
            json manifest = {{"tool", kToolVersion}, {"command", c.name}, {"config", cfg}};
            ctx.write("manifest.json", io::dump_json(manifest));
            return c.run(cfg, ctx);
        }
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kIoOrParse;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kIoOrParse;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kPrecondition;
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << '\n';
        return kIoOrParse;
    }
    return kPrecondition;
}

}  // namespace seqbias::cli
