#pragma once

// Closed-form constants of the consistency theory: penalty thresholds, gap
// functions, failure probabilities, signal strengths, localisation radii,
// chi-square tail bounds, non-centralities and noise-scale estimation.
//
// Logarithms are natural throughout. Functions that leave their domain return
// a trivial bound together with a flag instead of throwing, except where the
// domain violation makes the quantity meaningless (gap functions).

#include "penseg/core.hpp"

#include <optional>
#include <vector>

namespace penseg {

struct TheoryParams {
    double epsilon = 0.2;
    int length = 2;  // T
    int m_star = 0;
    ModelSpec model;
    /// The slope model's unspecified constant C; theory-side only.
    double slope_constant = 1.0;
    /// Experimental: when set, the first penalty threshold is checked at this
    /// maximum segment length instead of T.
    std::optional<int> max_segment_length;

    void validate() const;
};

/// (2 + epsilon) log T.
double default_penalty(double length, double epsilon);

struct GammaThresholds {
    double gamma1;
    double gamma2;
};
GammaThresholds gamma_thresholds(const TheoryParams& params, double n);

struct GapFunctions {
    double a;
    double b;
};
/// Throws InputError unless gamma > 2 log n.
GapFunctions gap_functions(const TheoryParams& params, double gamma, double n);

struct FailureProbs {
    double p1, p2, p3, p4;  // each clipped to (0, 1]
};
FailureProbs failure_probs(const TheoryParams& params, double gamma, double n);

/// S(delta, n). Increasing in delta; non-decreasing in n for mean and slope,
/// non-increasing in n for spike.
double signal_strength(const ModelSpec& model, double delta, double n);

struct Flagged {
    double value;
    bool valid;  // false: preconditions failed and value is the trivial bound 1
};

/// 2 exp(-z/20), valid when S/4 >= z >= 5 (mean, spike) or 8 (slope).
Flagged p5(const ModelSpec& model, double strength, double z);

struct Radius {
    int n;
    /// Untruncated radius term; +inf when the spike logarithm has no
    /// positive argument, i.e. every window length satisfies the condition.
    double term;
    bool unbounded() const;
};

/// min(model radius term, left_length, right_length), rounded up (down for
/// spike, whose strength falls with n), >= 1.
Radius localization_radius(const ModelSpec& model, double beta, double a_beta_T, double delta,
                           int left_length, int right_length);

struct LocalizationPlan {
    std::vector<int> n;
    double s_bar = 0.0;
};

/// Radius for every true change plus the minimum signal strength.
LocalizationPlan plan_from_radii(const TruthSpec& truth, double beta, double a_beta_T);
/// Explicit radii; validates 0 < n_j <= min(delta_j, delta_{j+1}).
LocalizationPlan plan_from_radii(const TruthSpec& truth, std::vector<int> n);

struct GlobalBound {
    double value;
    bool vacuous;          // value <= 0
    bool thresholds_met;   // beta >= max(gamma1 at T, gamma2 at max n_j)
    bool gap_condition;    // a(beta, T) > 2 m* b(beta, T)
    bool p5_valid;
    double gamma1;
    double gamma2;
    FailureProbs at_length;
    FailureProbs at_window;
    double p5;
};
GlobalBound global_bound(const TheoryParams& params, double beta, const LocalizationPlan& plan);

/// m_hat == m_star and |tau_hat_j - tau_j| <= n_j for all j.
bool event_holds(const TruthSpec& truth, const PenalizedFit& fit, const LocalizationPlan& plan);

/// Right-hand side of each model's headline probability bound,
/// 1 - c_1(m*) T^{-epsilon / c_2(m*)}.
double theorem_probability(ModelKind kind, double length, double epsilon, int m_star);
/// Constant c with the event bound c log T on the scaled location error.
double theorem_location_constant(ModelKind kind, double epsilon);

/// log T beyond which default_penalty(T, epsilon) >= gamma1 at T (found by
/// bisection over log T; +inf if none below exp(1e6)).
double penalty_crossover_log_length(const TheoryParams& params);

struct TailBounds {
    double upper;
    bool upper_valid;  // requires x > k
    double lower;
    bool lower_valid;  // requires y < k + nu
};
/// P(chi2_k >= x) <= upper; P(chi2_k(nu) <= y) <= lower.
TailBounds chisq_tail_bounds(int k, double x, double nu, double y);

/// Window of n points each side of one mean change of size delta.
double noncentrality_mean(double delta, double n, double sigma = 1.0);
/// Slope window of 2n points, knot values theta0, theta1, theta2 at 0, n, 2n.
double noncentrality_slope_knots(double theta0, double theta1, double theta2, double n, double sigma = 1.0);
/// Same quantity from the slope change delta.
double noncentrality_slope_delta(double delta, double n, double sigma = 1.0);
/// Exact spike window value: amplitudes theta1 (left) and theta2 (right).
double noncentrality_spike(double theta1, double theta2, double alpha, double n, double sigma = 1.0);
/// Alternative closed form in the jump size; diverges as alpha -> 1 and is
/// kept for comparison only.
double noncentrality_spike_displayed(double delta, double alpha, double n);

struct SigmaEstimate {
    double sigma;
    bool degenerate;  // sigma == 0; the caller must supply sigma
};
/// median(|d|) / (0.6745 sqrt(c)) over order-1 (c = 2) or order-2 (c = 6)
/// differences.
SigmaEstimate mad_sigma(const TimeSeries& x, int difference_order);

}  // namespace penseg
