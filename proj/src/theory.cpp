#include "penseg/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace penseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Width of the m*-split: 2 m* + 1 regions.
double split(int m_star) { return 2.0 * m_star + 1.0; }

// gamma1 as a function of log n, shared by the threshold and crossover code.
double gamma1_at_log(const TheoryParams& p, double log_n) {
    const double k = split(p.m_star);
    if (p.model.kind == ModelKind::Slope) {
        return std::max({(2.0 + p.epsilon) * log_n, 2.0 * log_n + 4.0 * std::sqrt(9.0 + 3.0 * log_n) + 12.0,
                         2.0 * log_n + 96.0 * k});
    }
    return std::max({(2.0 + p.epsilon) * log_n, 2.0 * log_n + 8.0 * std::sqrt(16.0 + 2.0 * log_n) + 32.0,
                     2.0 * log_n + 32.0 * k});
}

double clip_probability(double p) { return std::clamp(p, 0.0, 1.0); }

void check_n(double n) {
    if (!(n >= 1.0) || !std::isfinite(n)) throw InputError("window length n must be finite and >= 1");
}

}  // namespace

void TheoryParams::validate() const {
    model.validate();
    if (!(epsilon > 0.0)) throw InputError("epsilon must be > 0");
    if (length < 2) throw InputError("T must be >= 2");
    if (m_star < 0) throw InputError("m* must be >= 0");
    if (!(slope_constant > 0.0)) throw InputError("the slope constant must be > 0");
    if (max_segment_length && (*max_segment_length < 1 || *max_segment_length > length))
        throw InputError("max segment length must lie in [1, T]");
}

double default_penalty(double length, double epsilon) {
    if (!(length >= 2.0)) throw InputError("T must be >= 2");
    if (!(epsilon > 0.0)) throw InputError("epsilon must be > 0");
    return (2.0 + epsilon) * std::log(length);
}

GammaThresholds gamma_thresholds(const TheoryParams& params, double n) {
    params.validate();
    if (!(n >= 2.0)) throw InputError("n must be >= 2");
    const double log_n = std::log(n);
    const double log_2n = std::log(2.0 * n);
    const double k = split(params.m_star);
    const double eps = params.epsilon;
    GammaThresholds g{gamma1_at_log(params, log_n), 0.0};
    if (params.model.kind == ModelKind::Slope) {
        const double inner = params.slope_constant * log_2n;
        // log(C log 2n) only adds to the max when it is defined and positive.
        const double log_term = inner > 0.0 ? 2.0 * log_2n + 32.0 * std::log(inner) : -kInf;
        g.gamma2 = std::max({(3.0 + eps) * log_2n, log_term, 2.0 * log_2n + 972.0 * k, 3240.0});
    } else {
        g.gamma2 = std::max((8.0 * params.m_star + 6.0 + eps) * log_2n, 2.0 * log_2n + 64.0 * k);
    }
    return g;
}

GapFunctions gap_functions(const TheoryParams& params, double gamma, double n) {
    params.validate();
    check_n(n);
    const double excess = gamma - 2.0 * std::log(n);
    if (!(excess > 0.0)) throw InputError("gap functions need gamma > 2 log n");
    const double divisor = params.model.kind == ModelKind::Slope ? 6.0 : 4.0;
    GapFunctions g{excess / divisor, excess / (divisor * split(params.m_star))};
    return g;
}

FailureProbs failure_probs(const TheoryParams& params, double gamma, double n) {
    params.validate();
    check_n(n);
    const double log_n = std::log(n);
    const double log_2n = std::log(2.0 * n);
    const double k = split(params.m_star);
    FailureProbs p{};
    if (params.model.kind == ModelKind::Slope) {
        p.p1 = 2.0 * std::exp(-(gamma - 2.0 * log_n) / 6.0);
        p.p2 = std::exp(-(gamma - 2.0 * log_n) / (24.0 * k));
        p.p3 = 2.25 * std::exp(-(gamma - 3.0 * log_2n) / 3.0);
        p.p4 = std::exp(-(gamma - 2.0 * log_2n) / (24.0 * k));
    } else {
        p.p1 = 2.0 * std::exp(-(gamma - 2.0 * log_n) / 4.0);
        p.p2 = std::exp(-(gamma - 2.0 * log_n) / (16.0 * k));
        p.p3 = std::exp(-(gamma - 8.0 * log_2n) / 4.0);
        p.p4 = std::exp(-(gamma - (8.0 * params.m_star + 6.0) * log_2n) / (16.0 * k));
    }
    p.p1 = clip_probability(p.p1);
    p.p2 = clip_probability(p.p2);
    p.p3 = clip_probability(p.p3);
    p.p4 = clip_probability(p.p4);
    return p;
}

double signal_strength(const ModelSpec& model, double delta, double n) {
    model.validate();
    if (!(delta > 0.0)) throw InputError("change size must be > 0");
    check_n(n);
    switch (model.kind) {
        case ModelKind::Mean: return n * delta * delta / 2.0;
        case ModelKind::Slope: return n * n * n * delta * delta / 25.0;
        case ModelKind::Spike: {
            const double a2 = model.decay() * model.decay();
            // 1 - alpha^{2n} via expm1 keeps precision for alpha near 1.
            const double decayed = -std::expm1(n * std::log(a2));
            return delta * delta / (decayed * (1.0 - a2));
        }
    }
    return 0.0;
}

Flagged p5(const ModelSpec& model, double strength, double z) {
    const double floor = model.kind == ModelKind::Slope ? 8.0 : 5.0;
    if (strength / 4.0 >= z && z >= floor) return {2.0 * std::exp(-z / 20.0), true};
    return {1.0, false};
}

bool Radius::unbounded() const { return std::isinf(term); }

Radius localization_radius(const ModelSpec& model, double beta, double a_beta_T, double delta, int left_length,
                           int right_length) {
    model.validate();
    if (!(delta > 0.0)) throw InputError("change size must be > 0");
    if (left_length < 1 || right_length < 1) throw InputError("segment lengths must be >= 1");
    const double z = beta + a_beta_T;
    if (!(z > 0.0)) throw InputError("beta + a(beta, T) must be > 0");
    double term = 0.0;
    switch (model.kind) {
        case ModelKind::Mean: term = 8.0 * z / (delta * delta); break;
        case ModelKind::Slope: term = std::cbrt(100.0 * z / (delta * delta)); break;
        case ModelKind::Spike: {
            const double alpha = model.decay();
            const double arg = 1.0 - delta * delta / (4.0 * (1.0 - alpha * alpha) * z);
            term = arg > 0.0 ? 0.5 * std::log(arg) / std::log(alpha) : kInf;
            break;
        }
    }
    const double capped = std::min({term, static_cast<double>(left_length), static_cast<double>(right_length)});
    // Spike strength falls with n, so rounding down keeps S(delta, n) >= 4 (beta + a).
    const double rounded = model.kind == ModelKind::Spike ? std::floor(capped + 1e-9) : std::ceil(capped - 1e-9);
    const int n = std::max(1, static_cast<int>(rounded));
    return {n, term};
}

LocalizationPlan plan_from_radii(const TruthSpec& truth, double beta, double a_beta_T) {
    truth.validate();
    const auto lengths = truth.segment_lengths();
    const auto sizes = truth.change_sizes();
    std::vector<int> n(sizes.size());
    for (std::size_t j = 0; j < sizes.size(); ++j) {
        n[j] = localization_radius(truth.model, beta, a_beta_T, sizes[j], lengths[j], lengths[j + 1]).n;
    }
    return plan_from_radii(truth, std::move(n));
}

LocalizationPlan plan_from_radii(const TruthSpec& truth, std::vector<int> n) {
    truth.validate();
    if (static_cast<int>(n.size()) != truth.num_changes()) throw InputError("one radius per true change required");
    const auto lengths = truth.segment_lengths();
    const auto sizes = truth.change_sizes();
    LocalizationPlan plan;
    plan.s_bar = kInf;
    for (std::size_t j = 0; j < n.size(); ++j) {
        if (n[j] < 1 || n[j] > std::min(lengths[j], lengths[j + 1]))
            throw InputError("radius must satisfy 0 < n_j <= min(delta_j, delta_{j+1})");
        plan.s_bar = std::min(plan.s_bar, signal_strength(truth.model, sizes[j], n[j]));
    }
    plan.n = std::move(n);
    return plan;
}

GlobalBound global_bound(const TheoryParams& params, double beta, const LocalizationPlan& plan) {
    params.validate();
    if (static_cast<int>(plan.n.size()) != params.m_star) throw InputError("plan size must equal m*");
    const double T = params.length;
    const double m = params.m_star;
    GlobalBound out{};
    const GapFunctions gap = gap_functions(params, beta, T);
    out.gap_condition = gap.a > 2.0 * m * gap.b;
    out.at_length = failure_probs(params, beta, T);
    out.value = 1.0 - (m + 1.0) * out.at_length.p1 - (m + 1.0) * out.at_length.p2;

    const double first_n = params.max_segment_length ? *params.max_segment_length : T;
    out.gamma1 = first_n >= 2.0 ? gamma_thresholds(params, first_n).gamma1 : gamma1_at_log(params, 0.0);
    out.gamma2 = 0.0;
    out.p5_valid = true;
    if (params.m_star > 0) {
        const double n_max = *std::max_element(plan.n.begin(), plan.n.end());
        out.gamma2 = gamma_thresholds(params, std::max(2.0, n_max)).gamma2;
        out.at_window = failure_probs(params, beta, n_max);
        const Flagged q = p5(params.model, plan.s_bar, beta + gap.a);
        out.p5 = q.value;
        out.p5_valid = q.valid;
        out.value -= m * (out.at_window.p3 + out.at_window.p4 + out.p5);
    }
    out.thresholds_met = beta >= std::max(out.gamma1, out.gamma2);
    out.vacuous = out.value <= 0.0;
    return out;
}

bool event_holds(const TruthSpec& truth, const PenalizedFit& fit, const LocalizationPlan& plan) {
    const auto& est = fit.segmentation.changepoints;
    if (est.size() != truth.changepoints.size()) return false;
    for (std::size_t j = 0; j < est.size(); ++j) {
        if (std::abs(est[j] - truth.changepoints[j]) > plan.n[j]) return false;
    }
    return true;
}

double theorem_probability(ModelKind kind, double length, double epsilon, int m_star) {
    const double m = m_star;
    if (kind == ModelKind::Slope) return 1.0 - (33.0 * m / 4.0 + 3.0) * std::pow(length, -epsilon / (48.0 * m + 24.0));
    return 1.0 - (7.0 * m + 3.0) * std::pow(length, -epsilon / (32.0 * m + 16.0));
}

double theorem_location_constant(ModelKind kind, double epsilon) {
    switch (kind) {
        case ModelKind::Mean: return 16.0 + 10.0 * epsilon;
        case ModelKind::Slope: return 200.0 + 350.0 * epsilon / 3.0;
        case ModelKind::Spike: return 8.0 + 5.0 * epsilon;
    }
    return 0.0;
}

double penalty_crossover_log_length(const TheoryParams& params) {
    params.validate();
    // The gap (2 + eps) L - gamma1(L) is convex in L and tends to +inf, so its
    // non-negative set is a half-line.
    auto gap = [&](double L) { return (2.0 + params.epsilon) * L - gamma1_at_log(params, L); };
    double lo = std::log(2.0), hi = 1e6;
    if (gap(lo) >= 0.0) return lo;
    if (gap(hi) < 0.0) return kInf;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) >= 0.0 ? hi : lo) = mid;
    }
    return hi;
}

TailBounds chisq_tail_bounds(int k, double x, double nu, double y) {
    if (k < 1) throw InputError("degrees of freedom must be >= 1");
    if (!(nu >= 0.0)) throw InputError("non-centrality must be >= 0");
    TailBounds b{1.0, false, 1.0, false};
    if (x > k) {
        b.upper = std::exp(-(x - std::sqrt(k * (2.0 * x - k))) / 2.0);
        b.upper_valid = true;
    }
    if (y < k + nu) {
        const double gap = k + nu - y;
        b.lower = std::exp(-gap * gap / (4.0 * k + 8.0 * nu));
        b.lower_valid = true;
    }
    return b;
}

double noncentrality_mean(double delta, double n, double sigma) {
    check_n(n);
    return n * delta * delta / (2.0 * sigma * sigma);
}

double noncentrality_slope_knots(double theta0, double theta1, double theta2, double n, double sigma) {
    if (!(n >= 2.0)) throw InputError("slope windows need n >= 2");
    const double curvature = (theta2 - 2.0 * theta1 + theta0) / n;
    return curvature * curvature * n * (n + 1.0) * (n - 1.0) * (2.0 * n * n + 1.0) /
           (12.0 * (2.0 * n - 1.0) * (2.0 * n + 1.0)) / (sigma * sigma);
}

double noncentrality_slope_delta(double delta, double n, double sigma) {
    if (!(n >= 2.0)) throw InputError("slope windows need n >= 2");
    return delta * delta * n * (n + 1.0) * (n - 1.0) / 24.0 * (4.0 * n * n + 2.0) / (4.0 * n * n - 1.0) /
           (sigma * sigma);
}

double noncentrality_spike(double theta1, double theta2, double alpha, double n, double sigma) {
    check_n(n);
    ModelSpec::spike(alpha).validate();
    const double a2n = std::pow(alpha, 2.0 * n);
    const double jump = theta2 - std::pow(alpha, n) * theta1;
    return jump * jump * (1.0 - a2n) / ((1.0 + a2n) * (1.0 - alpha * alpha)) / (sigma * sigma);
}

double noncentrality_spike_displayed(double delta, double alpha, double n) {
    check_n(n);
    ModelSpec::spike(alpha).validate();
    const double a2n = std::pow(alpha, 2.0 * n);
    return delta * delta * (1.0 + a2n) / ((1.0 - a2n) * (1.0 - alpha * alpha));
}

SigmaEstimate mad_sigma(const TimeSeries& x, int difference_order) {
    if (difference_order != 1 && difference_order != 2) throw InputError("difference order must be 1 or 2");
    const Eigen::Index T = x.size();
    if (T < difference_order + 1) throw InputError("series too short for the requested differences");
    const Eigen::VectorXd& v = x.values();
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(T - difference_order));
    for (Eigen::Index i = difference_order; i < T; ++i) {
        const double diff = difference_order == 1 ? v[i] - v[i - 1] : v[i] - 2.0 * v[i - 1] + v[i - 2];
        d.push_back(std::abs(diff));
    }
    const std::size_t mid = d.size() / 2;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
    double median = d[mid];
    if (d.size() % 2 == 0) {
        median = 0.5 * (median + *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    const double c = difference_order == 1 ? 2.0 : 6.0;
    const double sigma = median / (0.6745 * std::sqrt(c));
    return {sigma, sigma == 0.0};
}

}  // namespace penseg
