#pragma once

// Synthetic data from the three segment models and Monte Carlo estimation of
// detection accuracy, location error scaling and window cost identities.

#include "penseg/basis.hpp"
#include "penseg/core.hpp"
#include "penseg/solver.hpp"
#include "penseg/theory.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace penseg {

/// Signal plus scale * N(0, 1) noise from stream `stream` of `seed`. The
/// scale defaults to truth.model.sigma; zero gives the exact signal.
TimeSeries generate(const TruthSpec& truth, std::uint64_t seed, std::uint64_t stream = 0,
                    std::optional<double> noise_scale = std::nullopt);

/// Truth with changes at round(T/3) and round(2T/3) (or the given count,
/// evenly spaced) and every change of size delta:
///   mean  levels 0, delta, 0, ...
///   slope slopes 0, delta, 0, ... starting from level 0
///   spike jumps of delta on top of the decayed previous amplitude.
TruthSpec evenly_spaced_truth(const ModelSpec& model, int length, int changes, double delta);

struct McConfig {
    TruthSpec truth;
    /// Explicit penalty; default (2 + epsilon) log T.
    std::optional<double> beta;
    double epsilon = 0.2;
    int replicates = 100;
    std::uint64_t seed = 1;
    /// Explicit localisation radii; default from the theory radius.
    std::optional<std::vector<int>> radii;
    bool record_replicates = false;
    std::optional<double> noise_scale;
    SolverOptions solver;
    int threads = 1;

    void validate() const;
    double resolved_beta() const;
};

struct ReplicateRecord {
    int replicate = 0;
    std::vector<int> changepoints;
    double objective = 0.0;
    bool event = false;
};

enum class RadiusRule { Explicit, Theory, SegmentLengths };
std::string_view to_string(RadiusRule rule);

struct McReport {
    int replicates = 0;
    int count_m_correct = 0;
    int count_event = 0;
    double beta = 0.0;
    LocalizationPlan plan;
    RadiusRule radius_rule = RadiusRule::Theory;

    double empirical_prob = 0.0;  // of the event
    double standard_error = 0.0;  // binomial, of empirical_prob
    double m_correct_prob = 0.0;
    double m_correct_standard_error = 0.0;
    double mean_m_hat = 0.0;
    std::vector<int> m_hat_histogram;  // index m, up to the largest m seen

    /// Per true change, quantiles {0.5, 0.9, 1.0} of |tau_hat - tau| over
    /// replicates with m_hat == m*.
    std::vector<std::vector<double>> location_quantiles;
    /// Per replicate with m_hat == m*: the model's scaled location error.
    std::vector<double> scaled_errors;

    std::optional<GlobalBound> theory_bound;  // absent when beta <= 2 log T

    std::vector<ReplicateRecord> records;
    double seconds = 0.0;
    std::string rng_algorithm;
};

McReport run_mc(const McConfig& config);

/// The largest over changes of |e| Delta^2 (mean) or |e|^3 Delta^2 (slope);
/// for spike the smallest over changes of Delta^2 / ((1 - a^2)(1 - a^{2|e|})),
/// which is +inf for an exact hit.
double scaled_location_error(const TruthSpec& truth, std::span<const int> estimate);

struct SweepConfig {
    ModelSpec model;
    std::vector<int> lengths;
    double epsilon = 0.2;
    int replicates = 100;
    std::uint64_t seed = 1;
    double quantile = 0.9;
    int threads = 1;
    std::optional<double> noise_scale;
    /// Truth for each T; default evenly_spaced_truth(model, T, 2, delta).
    std::function<TruthSpec(int)> truth_for_length;
    double delta = 1.0;

    void validate() const;
};

struct SweepRow {
    int length = 0;
    double beta = 0.0;
    int replicates = 0;
    int m_correct = 0;
    /// q-quantile of the scaled error (mean, slope) or (1-q)-quantile of the
    /// spike quantity, over replicates with m_hat == m*.
    double scaled_error_quantile = 0.0;
    /// theorem_location_constant * log T.
    double reference = 0.0;
};

struct SweepTable {
    ModelKind model = ModelKind::Mean;
    double quantile = 0.9;
    double constant = 0.0;  // theorem_location_constant(model, epsilon)
    std::vector<SweepRow> rows;
    /// Least-squares slope of scaled_error_quantile against log T (finite
    /// rows only); the theory bounds it by `constant`.
    double fitted_slope = 0.0;
};

SweepTable scaling_sweep(const SweepConfig& config);

/// 2n-point window with one change of size delta after point n.
struct WindowSpec {
    ModelSpec model;
    int n = 10;
    double delta = 1.0;
};

struct WindowReport {
    WindowSpec spec;
    int replicates = 0;
    double noncentrality = 0.0;
    int true_minus_fit_dof = 0;
    SampleSummary true_minus_fit;  // L*(S) - L(S; tau*) against central chi2
    SampleSummary null_minus_fit;  // L(S; none) - L(S; tau*) against chi2_1(nu)
};

/// The noiseless window for `spec` as a truth description.
TruthSpec window_truth(const WindowSpec& spec);
/// The exact non-centrality of the window's no-change versus one-change
/// cost difference, from the theory module.
double window_noncentrality(const WindowSpec& spec);

WindowReport window_check(const WindowSpec& spec, int replicates, std::uint64_t seed, int threads = 1);

/// Mean, variance, standard error and KS fit of `sample` against `cdf`.
SampleSummary summarize(std::vector<double> sample, double expected_mean,
                        const std::function<double(double)>& cdf);

}  // namespace penseg
