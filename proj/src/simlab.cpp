#include "penseg/simlab.hpp"

#include "parallel.hpp"
#include "penseg/distributions.hpp"
#include "penseg/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace penseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Linear interpolation between order statistics.
double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    if (std::isinf(v[lo]) || std::isinf(v[hi])) return v[pos - lo < 0.5 ? lo : hi];
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double binomial_se(double p, int n) { return n > 0 ? std::sqrt(p * (1.0 - p) / n) : 0.0; }

int dof_true_minus_fit(ModelKind kind) { return kind == ModelKind::Slope ? 3 : 2; }

}  // namespace

TimeSeries generate(const TruthSpec& truth, std::uint64_t seed, std::uint64_t stream,
                    std::optional<double> noise_scale) {
    truth.validate();
    const double scale = noise_scale.value_or(truth.model.sigma);
    if (!(scale >= 0.0) || !std::isfinite(scale)) throw InputError("noise scale must be finite and >= 0");
    Eigen::VectorXd x = truth.signal();
    Philox4x32 rng(seed, stream);
    for (Eigen::Index t = 0; t < x.size(); ++t) x[t] += scale * rng.normal();
    return TimeSeries(std::move(x));
}

TruthSpec evenly_spaced_truth(const ModelSpec& model, int length, int changes, double delta) {
    model.validate();
    if (changes < 0 || length < changes + 1) throw InputError("too many changes for the series length");
    if (!(delta > 0.0)) throw InputError("change size must be > 0");
    TruthSpec truth;
    truth.model = model;
    truth.length = length;
    for (int j = 1; j <= changes; ++j) {
        truth.changepoints.push_back(static_cast<int>(std::lround(static_cast<double>(j) * length / (changes + 1))));
    }
    const auto level = [&](int j) { return j % 2 == 1 ? delta : 0.0; };
    switch (model.kind) {
        case ModelKind::Mean:
            truth.params.resize(changes + 1);
            for (int j = 0; j <= changes; ++j) truth.params[j] = level(j);
            break;
        case ModelKind::Slope: {
            truth.params.resize(changes + 2);
            truth.params[0] = 0.0;
            int prev = 0;
            for (int j = 0; j <= changes; ++j) {
                const int next = j < changes ? truth.changepoints[j] : length;
                truth.params[j + 1] = truth.params[j] + level(j) * (next - prev);
                prev = next;
            }
            break;
        }
        case ModelKind::Spike: {
            truth.params.resize(changes + 1);
            truth.params[0] = delta;
            int prev = 0;
            for (int j = 0; j < changes; ++j) {
                const int len = truth.changepoints[j] - prev;
                truth.params[j + 1] = truth.params[j] * std::pow(model.decay(), len - 1) + delta;
                prev = truth.changepoints[j];
            }
            break;
        }
    }
    truth.validate();
    return truth;
}

void McConfig::validate() const {
    truth.validate();
    if (replicates < 1) throw InputError("replicates must be >= 1");
    if (threads < 1) throw InputError("threads must be >= 1");
    if (beta && !(*beta > 0.0)) throw InputError("beta must be > 0");
    if (!beta && !(epsilon > 0.0)) throw InputError("epsilon must be > 0");
    if (noise_scale && !(*noise_scale >= 0.0)) throw InputError("noise scale must be >= 0");
    solver.validate();
}

double McConfig::resolved_beta() const { return beta ? *beta : default_penalty(truth.length, epsilon); }

std::string_view to_string(RadiusRule rule) {
    switch (rule) {
        case RadiusRule::Explicit: return "explicit";
        case RadiusRule::Theory: return "theory";
        case RadiusRule::SegmentLengths: return "segment-lengths";
    }
    return "?";
}

double scaled_location_error(const TruthSpec& truth, std::span<const int> estimate) {
    if (estimate.size() != truth.changepoints.size()) throw InputError("estimate must have m* changepoints");
    const auto sizes = truth.change_sizes();
    const bool spike = truth.model.kind == ModelKind::Spike;
    double out = spike ? kInf : 0.0;
    for (std::size_t j = 0; j < estimate.size(); ++j) {
        const double e = std::abs(estimate[j] - truth.changepoints[j]);
        const double d2 = sizes[j] * sizes[j];
        switch (truth.model.kind) {
            case ModelKind::Mean: out = std::max(out, e * d2); break;
            case ModelKind::Slope: out = std::max(out, e * e * e * d2); break;
            case ModelKind::Spike: {
                const double a2 = truth.model.decay() * truth.model.decay();
                const double shrink = -std::expm1(e * std::log(a2));
                out = std::min(out, shrink > 0.0 ? d2 / ((1.0 - a2) * shrink) : kInf);
                break;
            }
        }
    }
    return out;
}

McReport run_mc(const McConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const TruthSpec& truth = config.truth;
    const int T = truth.length;
    const int m_star = truth.num_changes();

    McReport report;
    report.replicates = config.replicates;
    report.beta = config.resolved_beta();
    report.rng_algorithm = std::string(kRngAlgorithm);

    TheoryParams theory;
    theory.epsilon = config.epsilon;
    theory.length = T;
    theory.m_star = m_star;
    theory.model = truth.model;
    const bool gap_defined = report.beta > 2.0 * std::log(static_cast<double>(T));

    if (config.radii) {
        report.plan = plan_from_radii(truth, *config.radii);
        report.radius_rule = RadiusRule::Explicit;
    } else if (gap_defined) {
        report.plan = plan_from_radii(truth, report.beta, gap_functions(theory, report.beta, T).a);
        report.radius_rule = RadiusRule::Theory;
    } else {
        const auto lengths = truth.segment_lengths();
        std::vector<int> n(static_cast<std::size_t>(m_star));
        for (int j = 0; j < m_star; ++j) n[j] = std::min(lengths[j], lengths[j + 1]);
        report.plan = plan_from_radii(truth, std::move(n));
        report.radius_rule = RadiusRule::SegmentLengths;
    }
    if (gap_defined) report.theory_bound = global_bound(theory, report.beta, report.plan);

    std::vector<ReplicateRecord> records(static_cast<std::size_t>(config.replicates));
    detail::parallel_for(config.replicates, config.threads, [&](int r) {
        const TimeSeries x = generate(truth, config.seed, static_cast<std::uint64_t>(r), config.noise_scale);
        PenalizedFit fit;
        try {
            fit = detect(x, truth.model, report.beta, config.solver);
        } catch (const NumericError& e) {
            throw NumericError("replicate " + std::to_string(r) + ": " + e.what());
        }
        auto& rec = records[static_cast<std::size_t>(r)];
        rec.replicate = r;
        rec.objective = fit.objective;
        rec.event = event_holds(truth, fit, report.plan);
        rec.changepoints = std::move(fit.segmentation.changepoints);
    });

    // Reductions run in replicate order so any worker count gives one answer.
    std::vector<std::vector<double>> errors(static_cast<std::size_t>(m_star));
    double total_m = 0.0;
    for (const auto& rec : records) {
        const int m = static_cast<int>(rec.changepoints.size());
        total_m += m;
        if (static_cast<int>(report.m_hat_histogram.size()) <= m) report.m_hat_histogram.resize(m + 1, 0);
        ++report.m_hat_histogram[m];
        if (rec.event) ++report.count_event;
        if (m != m_star) continue;
        ++report.count_m_correct;
        for (int j = 0; j < m_star; ++j) errors[j].push_back(std::abs(rec.changepoints[j] - truth.changepoints[j]));
        if (m_star > 0) report.scaled_errors.push_back(scaled_location_error(truth, rec.changepoints));
    }
    const int R = config.replicates;
    report.mean_m_hat = total_m / R;
    report.empirical_prob = static_cast<double>(report.count_event) / R;
    report.standard_error = binomial_se(report.empirical_prob, R);
    report.m_correct_prob = static_cast<double>(report.count_m_correct) / R;
    report.m_correct_standard_error = binomial_se(report.m_correct_prob, R);
    for (auto& e : errors) report.location_quantiles.push_back({quantile(e, 0.5), quantile(e, 0.9), quantile(e, 1.0)});
    if (config.record_replicates) report.records = std::move(records);
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

void SweepConfig::validate() const {
    model.validate();
    if (lengths.size() < 3) throw InputError("a sweep needs at least three lengths");
    if (replicates < 1) throw InputError("replicates must be >= 1");
    if (!(quantile > 0.0 && quantile < 1.0)) throw InputError("quantile must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw InputError("epsilon must be > 0");
}

SweepTable scaling_sweep(const SweepConfig& config) {
    config.validate();
    SweepTable table;
    table.model = config.model.kind;
    table.quantile = config.quantile;
    table.constant = theorem_location_constant(config.model.kind, config.epsilon);
    const bool spike = config.model.kind == ModelKind::Spike;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < config.lengths.size(); ++i) {
        const int T = config.lengths[i];
        McConfig mc;
        mc.truth = config.truth_for_length ? config.truth_for_length(T)
                                           : evenly_spaced_truth(config.model, T, 2, config.delta);
        mc.epsilon = config.epsilon;
        mc.replicates = config.replicates;
        mc.seed = config.seed + i;
        mc.threads = config.threads;
        mc.noise_scale = config.noise_scale;
        const McReport rep = run_mc(mc);
        SweepRow row;
        row.length = T;
        row.beta = rep.beta;
        row.replicates = rep.replicates;
        row.m_correct = rep.count_m_correct;
        row.scaled_error_quantile = quantile(rep.scaled_errors, spike ? 1.0 - config.quantile : config.quantile);
        row.reference = table.constant * std::log(static_cast<double>(T));
        table.rows.push_back(row);
        if (std::isfinite(row.scaled_error_quantile)) {
            xs.push_back(std::log(static_cast<double>(T)));
            ys.push_back(row.scaled_error_quantile);
        }
    }
    if (xs.size() >= 2) {
        const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
        const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            sxy += (xs[k] - mx) * (ys[k] - my);
            sxx += (xs[k] - mx) * (xs[k] - mx);
        }
        table.fitted_slope = sxx > 0.0 ? sxy / sxx : 0.0;
    }
    return table;
}

TruthSpec window_truth(const WindowSpec& spec) {
    spec.model.validate();
    if (spec.n < 2) throw InputError("windows need n >= 2");
    if (!(spec.delta > 0.0)) throw InputError("change size must be > 0");
    TruthSpec truth;
    truth.model = spec.model;
    truth.length = 2 * spec.n;
    truth.changepoints = {spec.n};
    switch (spec.model.kind) {
        case ModelKind::Mean: truth.params = Eigen::VectorXd{{0.0, spec.delta}}; break;
        case ModelKind::Slope: truth.params = Eigen::VectorXd{{0.0, 0.0, spec.n * spec.delta}}; break;
        case ModelKind::Spike: {
            const double first = spec.delta;
            truth.params = Eigen::VectorXd{{first, first * std::pow(spec.model.decay(), spec.n - 1) + spec.delta}};
            break;
        }
    }
    truth.validate();
    return truth;
}

double window_noncentrality(const WindowSpec& spec) {
    const TruthSpec truth = window_truth(spec);
    const double sigma = spec.model.sigma;
    switch (spec.model.kind) {
        case ModelKind::Mean: return noncentrality_mean(spec.delta, spec.n, sigma);
        case ModelKind::Slope: return noncentrality_slope_delta(spec.delta, spec.n, sigma);
        case ModelKind::Spike:
            return noncentrality_spike(truth.params[0], truth.params[1], spec.model.decay(), spec.n, sigma);
    }
    return 0.0;
}

SampleSummary summarize(std::vector<double> sample, double expected_mean, const std::function<double(double)>& cdf) {
    SampleSummary s;
    const double n = static_cast<double>(sample.size());
    if (sample.size() < 2) throw InputError("need at least two samples");
    s.mean = std::accumulate(sample.begin(), sample.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : sample) ss += (v - s.mean) * (v - s.mean);
    s.variance = ss / (n - 1.0);
    s.standard_error = std::sqrt(s.variance / n);
    s.expected_mean = expected_mean;
    const KsResult ks = ks_test(std::span<double>(sample), cdf);
    s.ks_distance = ks.distance;
    s.ks_p_value = ks.p_value;
    return s;
}

WindowReport window_check(const WindowSpec& spec, int replicates, std::uint64_t seed, int threads) {
    if (replicates < 2) throw InputError("replicates must be >= 2");
    const TruthSpec truth = window_truth(spec);
    WindowReport report;
    report.spec = spec;
    report.replicates = replicates;
    report.noncentrality = window_noncentrality(spec);
    report.true_minus_fit_dof = dof_true_minus_fit(spec.model.kind);

    std::vector<double> star(static_cast<std::size_t>(replicates)), null(static_cast<std::size_t>(replicates));
    const std::vector<int> change{spec.n};
    detail::parallel_for(replicates, threads, [&](int r) {
        const TimeSeries x = generate(truth, seed, static_cast<std::uint64_t>(r));
        const double fitted = fit_params(x, spec.model, change).raw_cost;
        star[r] = true_cost(x, truth, 1, truth.length) - fitted;
        null[r] = fit_params(x, spec.model, {}).raw_cost - fitted;
    });
    const int dof = report.true_minus_fit_dof;
    const double nu = report.noncentrality;
    report.true_minus_fit = summarize(std::move(star), dof, [dof](double v) { return chisq_cdf(dof, v); });
    report.null_minus_fit =
        summarize(std::move(null), 1.0 + nu, [nu](double v) { return noncentral_chisq1_cdf(nu, v); });
    return report;
}

}  // namespace penseg
