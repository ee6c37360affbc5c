#pragma once

// Domain types and segment costs for the three segment models.
//
// Index convention (used library-wide): observations are x_1..x_T, 1-based in
// every public signature that takes a time index. A changepoint tau is the
// last index of the segment on its left, so segment j covers
// x_{tau_{j-1}+1 .. tau_j} with tau_0 = 0 and tau_{m+1} = T. Storage is
// 0-based: x_t lives at values()[t - 1].

#include <Eigen/Core>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace penseg {

/// Malformed input, invalid flags or arguments outside an operation's domain.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed (singular system, non-finite intermediate).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ModelKind { Mean, Slope, Spike };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelSpec {
    ModelKind kind = ModelKind::Mean;
    double sigma = 1.0;
    std::optional<double> alpha;  // decay rate, present iff kind == Spike

    static ModelSpec mean(double sigma = 1.0);
    static ModelSpec slope(double sigma = 1.0);
    static ModelSpec spike(double alpha, double sigma = 1.0);

    /// Throws InputError unless sigma > 0 and alpha is present and inside
    /// (0, 1) exactly when kind == Spike.
    void validate() const;
    double decay() const;  // alpha, throws for non-spike models
};

/// Ordered finite observations x_1..x_T, T >= 1.
class TimeSeries {
public:
    TimeSeries() = default;
    explicit TimeSeries(Eigen::VectorXd values);
    explicit TimeSeries(const std::vector<double>& values);

    Eigen::Index size() const { return values_.size(); }
    const Eigen::VectorXd& values() const { return values_; }
    double at(Eigen::Index t) const { return values_[t - 1]; }

    /// x_{s..e} re-indexed as a series of its own.
    TimeSeries slice(Eigen::Index s, Eigen::Index e) const;

private:
    Eigen::VectorXd values_;
};

/// Changepoints plus the per-model parameter block.
///   Mean:  params[j] = segment mean, m + 1 entries.
///   Slope: params[j] = fitted value at knot tau_j for j = 0..m+1, m + 2 entries.
///   Spike: params[j] = initial amplitude of segment j, m + 1 entries.
struct Segmentation {
    std::vector<int> changepoints;
    Eigen::VectorXd params;

    int num_changes() const { return static_cast<int>(changepoints.size()); }
};

struct PenalizedFit {
    Segmentation segmentation;
    double raw_cost = 0.0;
    double penalty = 0.0;
    double objective = 0.0;

    int num_changes() const { return segmentation.num_changes(); }
};

/// Description of the generating model.
struct TruthSpec {
    ModelSpec model;
    int length = 0;            // T
    std::vector<int> changepoints;
    Eigen::VectorXd params;    // same shape rules as Segmentation::params

    int num_changes() const { return static_cast<int>(changepoints.size()); }
    void validate() const;

    /// delta_j = tau_j - tau_{j-1} for j = 1..m+1.
    std::vector<int> segment_lengths() const;
    /// Model-specific change sizes Delta_j, j = 1..m.
    std::vector<double> change_sizes() const;
    /// The noiseless signal f_1..f_T.
    Eigen::VectorXd signal() const;
};

/// Throws InputError unless 0 < cp_1 < ... < cp_m < length.
void check_changepoints(std::span<const int> changepoints, Eigen::Index length);

/// Number of parameters a segmentation with m changes carries.
Eigen::Index param_count(ModelKind kind, int num_changes);

/// Piecewise signal implied by a parameter block.
Eigen::VectorXd signal_from_params(const ModelSpec& model, Eigen::Index length,
                                   std::span<const int> changepoints,
                                   const Eigen::VectorXd& params);

// ---------------------------------------------------------------------------
// Segment costs. Ranges are 1-based and inclusive.

double segment_cost_mean(const TimeSeries& x, Eigen::Index s, Eigen::Index e, double sigma);

double segment_cost_spike(const TimeSeries& x, Eigen::Index s, Eigen::Index e, double alpha,
                          double sigma);

/// Cost of a linear segment between two knots as a bivariate quadratic in the
/// knot values (phi_start at knot_left, phi_end at knot_right):
///
///   q(u, v) = ss u^2 + 2 se u v + ee v^2 + s u + e v + c
struct BivariateQuadratic {
    double ss = 0.0, se = 0.0, ee = 0.0;
    double s = 0.0, e = 0.0;
    double c = 0.0;

    double operator()(double phi_start, double phi_end) const {
        return ss * phi_start * phi_start + 2.0 * se * phi_start * phi_end +
               ee * phi_end * phi_end + s * phi_start + e * phi_end + c;
    }
};

/// Segment x_{knot_left+1 .. knot_right}; the fitted value at t is
/// phi_start + (phi_end - phi_start) (t - knot_left) / (knot_right - knot_left).
BivariateQuadratic segment_cost_slope(const TimeSeries& x, Eigen::Index knot_left,
                                      Eigen::Index knot_right, double sigma);

/// Cost of x_{s..e} against the fixed true signal (no minimisation).
double true_cost(const TimeSeries& x, const TruthSpec& truth, Eigen::Index s, Eigen::Index e);

struct FitResult {
    Eigen::VectorXd params;
    double raw_cost = 0.0;
};

/// Minimises L(x; changepoints) over the segment parameters. For the slope
/// model this solves the tridiagonal normal equations for the knot values.
FitResult fit_params(const TimeSeries& x, const ModelSpec& model, std::span<const int> changepoints);

// ---------------------------------------------------------------------------
// O(1) segment cost evaluators over precomputed sums, used by the solvers.
// The spike solver sweeps its weighted sums directly (see solver.cpp).

class MeanCost {
public:
    MeanCost(const TimeSeries& x, double sigma);
    /// Cost of x_{s+1..t}, i.e. the segment after boundary s up to t.
    double operator()(Eigen::Index s, Eigen::Index t) const;

private:
    Eigen::VectorXd sum_;
    Eigen::VectorXd sum_sq_;
    double inv_var_;
};

class SlopeCost {
public:
    SlopeCost(const TimeSeries& x, double sigma);
    /// Quadratic in (value at knot s, value at knot t) for x_{s+1..t}.
    BivariateQuadratic operator()(Eigen::Index s, Eigen::Index t) const;

private:
    Eigen::VectorXd sum_;     // sum of x_i
    Eigen::VectorXd sum_ix_;  // sum of (i - offset_) x_i
    Eigen::VectorXd sum_sq_;
    double offset_;
    double inv_var_;
};


}  // namespace penseg
