#include "cli.hpp"

#include "plot.hpp"
#include "penseg/basis.hpp"
#include "penseg/report.hpp"
#include "penseg/rng.hpp"
#include "penseg/simlab.hpp"
#include "penseg/solver.hpp"
#include "penseg/theory.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>

namespace penseg::cli {

namespace {

/// Bad flag values or combinations.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Output {
    Report report;
    std::vector<std::pair<std::string, std::string>> files;  // path, content
    std::optional<std::string> body;                         // replaces the report on stdout
};

struct ModelFlags {
    std::string model = "mean";
    double sigma = 1.0;
    std::optional<double> alpha;
};

struct TruthFlags {
    int length = 500;
    int changes = 2;
    double delta = 1.0;
    std::vector<int> changepoints;
    std::vector<double> params;
};

void add_model_flags(CLI::App* sub, ModelFlags& f) {
    sub->add_option("--model", f.model, "Segment model")
        ->check(CLI::IsMember({"mean", "slope", "spike"}))
        ->capture_default_str();
    sub->add_option("--sigma", f.sigma, "Noise standard deviation")->capture_default_str();
    sub->add_option("--alpha", f.alpha, "Decay rate of the spike model, in (0, 1)");
}

void add_truth_flags(CLI::App* sub, TruthFlags& f) {
    sub->add_option("--length", f.length, "Series length T")->capture_default_str();
    sub->add_option("--changes", f.changes, "Number of evenly spaced changes")->capture_default_str();
    sub->add_option("--delta", f.delta, "Size of every change")->capture_default_str();
    sub->add_option("--changepoints", f.changepoints, "Explicit changepoints (needs --params)")->delimiter(',');
    sub->add_option("--params", f.params, "Explicit parameter block")->delimiter(',');
}

// Library validation failures raised while resolving flags are usage errors.
template <typename F>
auto resolving(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const InputError& e) {
        throw UsageError(e.what());
    }
}

ModelSpec resolve_model(const ModelFlags& f) {
    const ModelKind kind = resolving([&] { return parse_model_kind(f.model); });
    if (kind == ModelKind::Spike && !f.alpha) throw UsageError("--model spike requires --alpha");
    if (kind != ModelKind::Spike && f.alpha) throw UsageError("--alpha applies to --model spike only");
    ModelSpec m;
    m.kind = kind;
    m.sigma = f.sigma;
    m.alpha = f.alpha;
    resolving([&] {
        m.validate();
        return 0;
    });
    return m;
}

TruthSpec resolve_truth(const ModelSpec& model, const TruthFlags& f) {
    return resolving([&] {
        if (f.changepoints.empty() && f.params.empty()) return evenly_spaced_truth(model, f.length, f.changes, f.delta);
        if (f.params.empty()) throw UsageError("--changepoints needs --params");
        TruthSpec t;
        t.model = model;
        t.length = f.length;
        t.changepoints = f.changepoints;
        t.params = Eigen::Map<const Eigen::VectorXd>(f.params.data(), static_cast<Eigen::Index>(f.params.size()));
        t.validate();
        return t;
    });
}

double resolve_beta(const std::string& beta, double length, double epsilon) {
    if (beta == "auto") return resolving([&] { return default_penalty(length, epsilon); });
    double value = 0.0;
    try {
        value = parse_number(beta);
    } catch (const InputError&) {
        throw UsageError("--beta must be a number or 'auto'");
    }
    if (!(value > 0.0) || !std::isfinite(value)) throw UsageError("--beta must be > 0");
    return value;
}

void set_model(Report& r, const ModelSpec& m) {
    r.set("model", to_string(m.kind));
    r.set("sigma", m.sigma);
    if (m.alpha) r.set("alpha", *m.alpha);
}

void set_summary(Report& r, const std::string& prefix, const SampleSummary& s) {
    r.set(prefix + ".mean", s.mean);
    r.set(prefix + ".expected_mean", s.expected_mean);
    r.set(prefix + ".variance", s.variance);
    r.set(prefix + ".standard_error", s.standard_error);
    r.set(prefix + ".ks_distance", s.ks_distance);
    r.set(prefix + ".ks_p_value", s.ks_p_value);
}

void set_manifest(Report& r, const CLI::App& root, const CLI::App& sub, std::optional<std::uint64_t> seed,
                  double seconds) {
    r.set("manifest.command", sub.get_name());
    r.set("manifest.version", kVersion);
    r.set("manifest.rng_algorithm", kRngAlgorithm);
    if (seed) r.set("manifest.seed", std::to_string(*seed));
    r.set("manifest.runtime_seconds", seconds);
    const auto add_config = [&](const CLI::App& app, const std::string& prefix) {
        for (const CLI::Option* opt : app.get_options()) {
            if (opt->get_lnames().empty() || opt->get_lnames().front() == "help" ||
                opt->get_lnames().front() == "config")
                continue;
            std::string value;
            if (opt->count() > 0) {
                for (const auto& v : opt->results()) value += (value.empty() ? "" : ",") + v;
            } else {
                value = opt->get_default_str();
            }
            if (value.empty()) value = "none";
            r.set(prefix + opt->get_lnames().front(), value);
        }
    };
    add_config(root, "config.");
    add_config(sub, "config." + sub.get_name() + ".");
}

// ---------------------------------------------------------------------------

struct DetectFlags {
    std::string input;
    ModelFlags model;
    bool estimate_sigma = false;
    std::string beta = "auto";
    double epsilon = 0.2;
    std::optional<int> max_changes;
    std::string pruning = "inequality";
};

Output cmd_detect(const DetectFlags& f, CLI::App* sub) {
    ModelFlags mf = f.model;
    const bool sigma_given = sub->get_option("--sigma")->count() > 0;
    if (f.estimate_sigma && sigma_given) throw UsageError("--sigma and --estimate-sigma are exclusive");
    if (!f.estimate_sigma && !sigma_given) throw UsageError("detect needs --sigma or --estimate-sigma");
    if (f.epsilon <= 0.0) throw UsageError("--epsilon must be > 0");
    mf.sigma = 1.0;
    ModelSpec model = resolve_model(mf);
    SolverOptions opts;
    opts.pruning = f.pruning == "none" ? Pruning::None : Pruning::Inequality;
    opts.max_changes = f.max_changes;
    resolving([&] {
        opts.validate();
        return 0;
    });

    const TimeSeries x = read_series(f.input);
    if (f.estimate_sigma) {
        const auto est = mad_sigma(x, model.kind == ModelKind::Slope ? 2 : 1);
        if (est.degenerate) throw InputError("the noise scale estimate is zero; pass --sigma");
        model.sigma = est.sigma;
    } else {
        model.sigma = f.model.sigma;
        resolving([&] {
            model.validate();
            return 0;
        });
    }
    const double beta = resolve_beta(f.beta, std::max<double>(2.0, static_cast<double>(x.size())), f.epsilon);
    const PenalizedFit fit = detect(x, model, beta, opts);

    Output o;
    set_model(o.report, model);
    o.report.set("sigma_estimated", f.estimate_sigma);
    o.report.set("T", static_cast<int>(x.size()));
    o.report.set("beta", beta);
    o.report.set("m_hat", fit.num_changes());
    o.report.set("changepoints", fit.segmentation.changepoints);
    o.report.set("params", fit.segmentation.params);
    o.report.set("raw_cost", fit.raw_cost);
    o.report.set("penalty", fit.penalty);
    o.report.set("objective", fit.objective);
    return o;
}

struct SimulateFlags {
    ModelFlags model;
    TruthFlags truth;
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;
    std::optional<double> noise_scale;
    std::string truth_output;
};

Output cmd_simulate(const SimulateFlags& f) {
    const ModelSpec model = resolve_model(f.model);
    const TruthSpec truth = resolve_truth(model, f.truth);
    if (f.noise_scale && !(*f.noise_scale >= 0.0)) throw UsageError("--noise-scale must be >= 0");
    const TimeSeries x = generate(truth, f.seed, f.stream, f.noise_scale);

    Output o;
    set_model(o.report, model);
    o.report.set("T", truth.length);
    o.report.set("changepoints", truth.changepoints);
    o.report.set("params", truth.params);
    o.report.set("change_sizes", truth.change_sizes());
    o.report.set("stream", std::to_string(f.stream));
    if (!f.truth_output.empty()) o.files.emplace_back(f.truth_output, std::string());
    o.body = format_series(x);
    return o;
}

struct McFlags {
    ModelFlags model;
    TruthFlags truth;
    int replicates = 100;
    std::uint64_t seed = 1;
    std::string beta = "auto";
    double epsilon = 0.2;
    std::vector<int> radii;
    std::optional<double> noise_scale;
    std::string replicates_tsv;
    std::string pruning = "inequality";
};

Output cmd_mc(const McFlags& f, int threads) {
    const ModelSpec model = resolve_model(f.model);
    McConfig c;
    c.truth = resolve_truth(model, f.truth);
    c.epsilon = f.epsilon;
    c.beta = resolve_beta(f.beta, c.truth.length, f.epsilon);
    c.replicates = f.replicates;
    c.seed = f.seed;
    if (!f.radii.empty()) c.radii = f.radii;
    c.noise_scale = f.noise_scale;
    c.record_replicates = !f.replicates_tsv.empty();
    c.threads = threads;
    c.solver.pruning = f.pruning == "none" ? Pruning::None : Pruning::Inequality;
    resolving([&] {
        c.validate();
        return 0;
    });
    if (c.radii) resolving([&] { return plan_from_radii(c.truth, *c.radii); });
    const McReport r = run_mc(c);

    Output o;
    set_model(o.report, model);
    o.report.set("T", c.truth.length);
    o.report.set("true_changepoints", c.truth.changepoints);
    o.report.set("change_sizes", c.truth.change_sizes());
    o.report.set("beta", r.beta);
    o.report.set("replicates", r.replicates);
    o.report.set("count_m_correct", r.count_m_correct);
    o.report.set("count_event", r.count_event);
    o.report.set("empirical_prob", r.empirical_prob);
    o.report.set("standard_error", r.standard_error);
    o.report.set("m_correct_prob", r.m_correct_prob);
    o.report.set("m_correct_standard_error", r.m_correct_standard_error);
    o.report.set("mean_m_hat", r.mean_m_hat);
    o.report.set("m_hat_histogram", r.m_hat_histogram);
    o.report.set("radius_rule", to_string(r.radius_rule));
    o.report.set("radii", r.plan.n);
    o.report.set("s_bar", r.plan.s_bar);
    for (std::size_t j = 0; j < r.location_quantiles.size(); ++j)
        o.report.set("location_error_quantiles." + std::to_string(j + 1), r.location_quantiles[j]);
    o.report.set("theory_bound.available", r.theory_bound.has_value());
    if (r.theory_bound) {
        const auto& b = *r.theory_bound;
        o.report.set("theory_bound.value", b.value);
        o.report.set("theory_bound.vacuous", b.vacuous);
        o.report.set("theory_bound.thresholds_met", b.thresholds_met);
        o.report.set("theory_bound.gap_condition", b.gap_condition);
        o.report.set("theory_bound.p5_valid", b.p5_valid);
        o.report.set("theory_bound.gamma1", b.gamma1);
        o.report.set("theory_bound.gamma2", b.gamma2);
    }
    o.report.set("theorem_probability",
                 theorem_probability(model.kind, c.truth.length, f.epsilon, c.truth.num_changes()));
    o.report.set("compute_seconds", r.seconds);
    if (!f.replicates_tsv.empty()) o.files.emplace_back(f.replicates_tsv, replicates_tsv(r));
    return o;
}

struct TheoryFlags {
    std::string quantity;
    ModelFlags model;
    double epsilon = 0.2;
    int length = 1000;
    int m_star = 0;
    double slope_constant = 1.0;
    std::optional<int> max_segment_length;
    std::optional<double> n, gamma, beta, a, delta, strength, z, x, nu, y;
    std::optional<int> k, left, right;
    std::optional<double> theta1, theta2;
    std::string input;
    int order = 1;
    int changes = 2;
};

const std::vector<std::string> kTheoryQuantities = {
    "default-penalty", "gamma-thresholds", "gap",        "failure-probs", "signal-strength", "p5",
    "radius",          "global-bound",     "chisq-bounds", "noncentrality", "crossover",     "theorem",
    "mad-sigma"};

template <typename T>
T need(const std::optional<T>& v, const char* flag) {
    if (!v) throw UsageError(std::string("this quantity needs ") + flag);
    return *v;
}

Output cmd_theory(const TheoryFlags& f) {
    const ModelSpec model = resolve_model(f.model);
    TheoryParams p;
    p.epsilon = f.epsilon;
    p.length = f.length;
    p.m_star = f.m_star;
    p.model = model;
    p.slope_constant = f.slope_constant;
    p.max_segment_length = f.max_segment_length;
    resolving([&] {
        p.validate();
        return 0;
    });

    Output o;
    Report& r = o.report;
    r.set("quantity", f.quantity);
    set_model(r, model);
    const auto& q = f.quantity;
    resolving([&] {
        if (q == "default-penalty") {
            r.set("beta", default_penalty(f.length, f.epsilon));
        } else if (q == "gamma-thresholds") {
            const auto g = gamma_thresholds(p, need(f.n, "--n"));
            r.set("gamma1", g.gamma1);
            r.set("gamma2", g.gamma2);
        } else if (q == "gap") {
            const auto g = gap_functions(p, need(f.gamma, "--gamma"), need(f.n, "--n"));
            r.set("a", g.a);
            r.set("b", g.b);
        } else if (q == "failure-probs") {
            const auto fp = failure_probs(p, need(f.gamma, "--gamma"), need(f.n, "--n"));
            r.set("p1", fp.p1);
            r.set("p2", fp.p2);
            r.set("p3", fp.p3);
            r.set("p4", fp.p4);
        } else if (q == "signal-strength") {
            r.set("S", signal_strength(model, need(f.delta, "--delta"), need(f.n, "--n")));
        } else if (q == "p5") {
            const auto v = p5(model, need(f.strength, "--strength"), need(f.z, "--z"));
            r.set("p5", v.value);
            r.set("valid", v.valid);
        } else if (q == "radius") {
            const double beta = f.beta.value_or(default_penalty(f.length, f.epsilon));
            const double a = f.a ? *f.a : gap_functions(p, beta, f.length).a;
            const auto rad = localization_radius(model, beta, a, need(f.delta, "--delta"), f.left.value_or(f.length),
                                                 f.right.value_or(f.length));
            r.set("beta", beta);
            r.set("a", a);
            r.set("n", rad.n);
            r.set("term", rad.term);
            r.set("unbounded", rad.unbounded());
        } else if (q == "global-bound") {
            const double beta = f.beta.value_or(default_penalty(f.length, f.epsilon));
            const TruthSpec truth = evenly_spaced_truth(model, f.length, f.m_star, need(f.delta, "--delta"));
            const auto plan = plan_from_radii(truth, beta, gap_functions(p, beta, f.length).a);
            const auto b = global_bound(p, beta, plan);
            r.set("beta", beta);
            r.set("radii", plan.n);
            r.set("s_bar", plan.s_bar);
            r.set("value", b.value);
            r.set("vacuous", b.vacuous);
            r.set("thresholds_met", b.thresholds_met);
            r.set("gap_condition", b.gap_condition);
            r.set("p5_valid", b.p5_valid);
            r.set("gamma1", b.gamma1);
            r.set("gamma2", b.gamma2);
        } else if (q == "chisq-bounds") {
            const auto b = chisq_tail_bounds(need(f.k, "--k"), need(f.x, "--x"), f.nu.value_or(0.0), need(f.y, "--y"));
            r.set("upper", b.upper);
            r.set("upper_valid", b.upper_valid);
            r.set("lower", b.lower);
            r.set("lower_valid", b.lower_valid);
        } else if (q == "noncentrality") {
            const double n = need(f.n, "--n");
            const double delta = need(f.delta, "--delta");
            switch (model.kind) {
                case ModelKind::Mean: r.set("nu", noncentrality_mean(delta, n, model.sigma)); break;
                case ModelKind::Slope: r.set("nu", noncentrality_slope_delta(delta, n, model.sigma)); break;
                case ModelKind::Spike: {
                    const double first = f.theta1.value_or(delta);
                    const double second = f.theta2.value_or(first * std::pow(*model.alpha, n - 1) + delta);
                    r.set("nu", noncentrality_spike(first, second, *model.alpha, n, model.sigma));
                    r.set("nu_displayed", noncentrality_spike_displayed(delta, *model.alpha, n) /
                                              (model.sigma * model.sigma));
                    break;
                }
            }
        } else if (q == "crossover") {
            const double L = penalty_crossover_log_length(p);
            r.set("log_length", L);
            r.set("length", std::exp(L));
        } else if (q == "theorem") {
            r.set("probability", theorem_probability(model.kind, f.length, f.epsilon, f.m_star));
            r.set("location_constant", theorem_location_constant(model.kind, f.epsilon));
            r.set("location_bound", theorem_location_constant(model.kind, f.epsilon) * std::log(f.length));
        } else if (q == "mad-sigma") {
            if (f.input.empty()) throw UsageError("mad-sigma needs --input");
            return 1;
        }
        return 0;
    });
    if (q == "mad-sigma") {
        const auto s = mad_sigma(read_series(f.input), f.order);
        r.set("sigma_hat", s.sigma);
        r.set("degenerate", s.degenerate);
    }
    return o;
}

struct BasisFlags {
    int n = 20;
    double delta = 0.05;
    double sigma = 1.0;
    int replicates = 2000;
    std::uint64_t seed = 1;
};

Output cmd_basis_check(const BasisFlags& f, int threads) {
    if (f.n < 2) throw UsageError("--n must be >= 2");
    if (f.replicates < 500) throw UsageError("--replicates must be >= 500");
    if (!(f.sigma > 0.0) || !(f.delta > 0.0)) throw UsageError("--sigma and --delta must be > 0");
    const auto rep = cost_identities_check(f.n, f.delta, f.sigma, f.replicates, f.seed, threads);
    Output o;
    Report& r = o.report;
    r.set("n", rep.n);
    r.set("window_length", 2 * rep.n);
    r.set("delta", rep.delta);
    r.set("sigma", rep.sigma);
    r.set("replicates", rep.replicates);
    r.set("noncentrality", rep.noncentrality);
    r.set("orthonormality_defect", rep.orthonormality_defect);
    r.set("max_identity_error", rep.max_identity_error);
    r.set("max_coefficient_correlation", rep.max_coefficient_correlation);
    set_summary(r, "true_minus_fit", rep.true_minus_fit);
    set_summary(r, "null_minus_fit", rep.null_minus_fit);
    set_summary(r, "no_change_window", rep.no_change_window);
    return o;
}

struct WindowFlags {
    ModelFlags model;
    int n = 20;
    double delta = 0.5;
    int replicates = 2000;
    std::uint64_t seed = 1;
};

Output cmd_window_check(const WindowFlags& f, int threads) {
    const ModelSpec model = resolve_model(f.model);
    if (f.replicates < 2) throw UsageError("--replicates must be >= 2");
    const WindowSpec spec{model, f.n, f.delta};
    resolving([&] { return window_truth(spec); });
    const auto rep = window_check(spec, f.replicates, f.seed, threads);
    Output o;
    set_model(o.report, model);
    o.report.set("n", f.n);
    o.report.set("delta", f.delta);
    o.report.set("replicates", rep.replicates);
    o.report.set("noncentrality", rep.noncentrality);
    o.report.set("true_minus_fit_dof", rep.true_minus_fit_dof);
    set_summary(o.report, "true_minus_fit", rep.true_minus_fit);
    set_summary(o.report, "null_minus_fit", rep.null_minus_fit);
    return o;
}

struct SweepFlags {
    ModelFlags model;
    std::vector<int> lengths{200, 400, 800, 1600};
    int replicates = 100;
    double epsilon = 0.2;
    double delta = 1.0;
    double quantile = 0.9;
    std::uint64_t seed = 1;
    std::optional<double> noise_scale;
    std::string tsv;
    std::string svg;
};

Output cmd_sweep(const SweepFlags& f, int threads) {
    SweepConfig c;
    c.model = resolve_model(f.model);
    c.lengths = f.lengths;
    c.replicates = f.replicates;
    c.epsilon = f.epsilon;
    c.delta = f.delta;
    c.quantile = f.quantile;
    c.seed = f.seed;
    c.noise_scale = f.noise_scale;
    c.threads = threads;
    resolving([&] {
        c.validate();
        for (int T : c.lengths) evenly_spaced_truth(c.model, T, 2, c.delta);
        return 0;
    });
    const SweepTable t = scaling_sweep(c);
    Output o;
    set_model(o.report, c.model);
    o.report.set("quantile", t.quantile);
    o.report.set("constant", t.constant);
    o.report.set("fitted_slope", t.fitted_slope);
    std::vector<int> lengths, m_correct;
    std::vector<double> betas, quantiles, references;
    for (const auto& row : t.rows) {
        lengths.push_back(row.length);
        m_correct.push_back(row.m_correct);
        betas.push_back(row.beta);
        quantiles.push_back(row.scaled_error_quantile);
        references.push_back(row.reference);
    }
    o.report.set("lengths", lengths);
    o.report.set("betas", betas);
    o.report.set("m_correct", m_correct);
    o.report.set("error_quantiles", quantiles);
    o.report.set("references", references);
    if (!f.tsv.empty()) o.files.emplace_back(f.tsv, sweep_tsv(t));
    if (!f.svg.empty()) o.files.emplace_back(f.svg, sweep_svg(t));
    return o;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Penalised cost changepoint detection for mean, slope and spike models", "penseg"};
    app.set_config("--config", "", "Read options from a TOML or INI file");
    // Root options such as --output may also follow the subcommand.
    app.fallthrough();
    app.require_subcommand(1, 1);
    int threads = 1;
    std::string output;
    app.add_option("--threads", threads, "Worker threads")->envname("PENSEG_THREADS")->capture_default_str();
    app.add_option("-o,--output", output, "Write the report to this file instead of stdout");

    DetectFlags detect_f;
    auto* detect_cmd = app.add_subcommand("detect", "Segment a series");
    detect_cmd->add_option("-i,--input", detect_f.input, "Series file")->required();
    add_model_flags(detect_cmd, detect_f.model);
    detect_cmd->add_flag("--estimate-sigma", detect_f.estimate_sigma, "Estimate sigma from differenced data");
    detect_cmd->add_option("--beta", detect_f.beta, "Penalty, or 'auto' for (2 + epsilon) log T")->capture_default_str();
    detect_cmd->add_option("--epsilon", detect_f.epsilon)->capture_default_str();
    detect_cmd->add_option("--max-changes", detect_f.max_changes, "Cap on the number of changes");
    detect_cmd->add_option("--pruning", detect_f.pruning)
        ->check(CLI::IsMember({"inequality", "none"}))
        ->capture_default_str();

    SimulateFlags sim_f;
    auto* sim_cmd = app.add_subcommand("simulate", "Draw a series from a true model");
    add_model_flags(sim_cmd, sim_f.model);
    add_truth_flags(sim_cmd, sim_f.truth);
    sim_cmd->add_option("--seed", sim_f.seed)->capture_default_str();
    sim_cmd->add_option("--stream", sim_f.stream)->capture_default_str();
    sim_cmd->add_option("--noise-scale", sim_f.noise_scale, "Noise scale (default sigma)");
    sim_cmd->add_option("--truth-output", sim_f.truth_output, "Write the truth report to this file");

    McFlags mc_f;
    auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo estimate of the localisation event");
    add_model_flags(mc_cmd, mc_f.model);
    add_truth_flags(mc_cmd, mc_f.truth);
    mc_cmd->add_option("--replicates", mc_f.replicates)->capture_default_str();
    mc_cmd->add_option("--seed", mc_f.seed)->capture_default_str();
    mc_cmd->add_option("--beta", mc_f.beta)->capture_default_str();
    mc_cmd->add_option("--epsilon", mc_f.epsilon)->capture_default_str();
    mc_cmd->add_option("--radii", mc_f.radii, "Explicit localisation radii")->delimiter(',');
    mc_cmd->add_option("--noise-scale", mc_f.noise_scale);
    mc_cmd->add_option("--replicates-tsv", mc_f.replicates_tsv, "Per-replicate table");
    mc_cmd->add_option("--pruning", mc_f.pruning)->check(CLI::IsMember({"inequality", "none"}))->capture_default_str();

    TheoryFlags th_f;
    auto* th_cmd = app.add_subcommand("theory", "Evaluate a closed-form quantity");
    th_cmd->add_option("quantity", th_f.quantity)->required()->check(CLI::IsMember(kTheoryQuantities));
    add_model_flags(th_cmd, th_f.model);
    th_cmd->add_option("--epsilon", th_f.epsilon)->capture_default_str();
    th_cmd->add_option("--length", th_f.length)->capture_default_str();
    th_cmd->add_option("--m-star", th_f.m_star)->capture_default_str();
    th_cmd->add_option("--slope-constant", th_f.slope_constant)->capture_default_str();
    th_cmd->add_option("--max-segment-length", th_f.max_segment_length, "Experimental");
    th_cmd->add_option("--n", th_f.n);
    th_cmd->add_option("--gamma", th_f.gamma);
    th_cmd->add_option("--beta", th_f.beta);
    th_cmd->add_option("--a", th_f.a);
    th_cmd->add_option("--delta", th_f.delta);
    th_cmd->add_option("--strength", th_f.strength);
    th_cmd->add_option("--z", th_f.z);
    th_cmd->add_option("--k", th_f.k);
    th_cmd->add_option("--x", th_f.x);
    th_cmd->add_option("--nu", th_f.nu);
    th_cmd->add_option("--y", th_f.y);
    th_cmd->add_option("--left", th_f.left);
    th_cmd->add_option("--right", th_f.right);
    th_cmd->add_option("--theta1", th_f.theta1);
    th_cmd->add_option("--theta2", th_f.theta2);
    th_cmd->add_option("-i,--input", th_f.input);
    th_cmd->add_option("--order", th_f.order)->check(CLI::IsMember({1, 2}))->capture_default_str();

    BasisFlags basis_f;
    auto* basis_cmd = app.add_subcommand("basis-check", "Orthonormal basis and slope window identities");
    basis_cmd->add_option("--n", basis_f.n, "Half window width")->capture_default_str();
    basis_cmd->add_option("--delta", basis_f.delta)->capture_default_str();
    basis_cmd->add_option("--sigma", basis_f.sigma)->capture_default_str();
    basis_cmd->add_option("--replicates", basis_f.replicates)->capture_default_str();
    basis_cmd->add_option("--seed", basis_f.seed)->capture_default_str();

    WindowFlags win_f;
    auto* win_cmd = app.add_subcommand("window-check", "Cost difference laws on single-change windows");
    add_model_flags(win_cmd, win_f.model);
    win_cmd->add_option("--n", win_f.n)->capture_default_str();
    win_cmd->add_option("--delta", win_f.delta)->capture_default_str();
    win_cmd->add_option("--replicates", win_f.replicates)->capture_default_str();
    win_cmd->add_option("--seed", win_f.seed)->capture_default_str();

    SweepFlags sw_f;
    auto* sw_cmd = app.add_subcommand("sweep", "Location error scaling over series lengths");
    add_model_flags(sw_cmd, sw_f.model);
    sw_cmd->add_option("--lengths", sw_f.lengths)->delimiter(',')->capture_default_str();
    sw_cmd->add_option("--replicates", sw_f.replicates)->capture_default_str();
    sw_cmd->add_option("--epsilon", sw_f.epsilon)->capture_default_str();
    sw_cmd->add_option("--delta", sw_f.delta)->capture_default_str();
    sw_cmd->add_option("--quantile", sw_f.quantile)->capture_default_str();
    sw_cmd->add_option("--seed", sw_f.seed)->capture_default_str();
    sw_cmd->add_option("--noise-scale", sw_f.noise_scale);
    sw_cmd->add_option("--tsv", sw_f.tsv);
    sw_cmd->add_option("--svg", sw_f.svg);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (threads < 1) throw UsageError("--threads must be >= 1");
        const auto start = std::chrono::steady_clock::now();
        CLI::App* sub = app.get_subcommands().front();
        Output result;
        std::optional<std::uint64_t> seed;
        if (sub == detect_cmd) {
            result = cmd_detect(detect_f, sub);
        } else if (sub == sim_cmd) {
            result = cmd_simulate(sim_f);
            seed = sim_f.seed;
        } else if (sub == mc_cmd) {
            result = cmd_mc(mc_f, threads);
            seed = mc_f.seed;
        } else if (sub == th_cmd) {
            result = cmd_theory(th_f);
        } else if (sub == basis_cmd) {
            result = cmd_basis_check(basis_f, threads);
            seed = basis_f.seed;
        } else if (sub == win_cmd) {
            result = cmd_window_check(win_f, threads);
            seed = win_f.seed;
        } else {
            result = cmd_sweep(sw_f, threads);
            seed = sw_f.seed;
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        set_manifest(result.report, app, *sub, seed, seconds);

        for (auto& [path, content] : result.files) {
            write_atomic(path, content.empty() ? result.report.str() : content);
        }
        if (result.body) {
            std::string text;
            std::istringstream lines(result.report.str());
            for (std::string line; std::getline(lines, line);) text += "# " + line + "\n";
            text += *result.body;
            if (output.empty()) {
                out << text;
            } else {
                write_atomic(output, text);
            }
        } else if (output.empty()) {
            out << result.report.str();
        } else {
            write_atomic(output, result.report.str());
        }
        return kOk;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const NumericError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumericFailure;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << "\n";
        return kNumericFailure;
    }
}

}  // namespace penseg::cli
