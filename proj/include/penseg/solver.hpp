#pragma once

// Exact minimisers of the penalised cost L(x; tau) + m beta.
//
// Ties (objectives within SolverOptions::tolerance) go to the segmentation
// with fewer changepoints, then to the lexicographically smallest changepoint
// vector. The functional slope solver applies the same rule at the level of
// its value functions: fewer changes first, then the earliest last change.

#include "penseg/core.hpp"
#include "penseg/piecewise_quadratic.hpp"

#include <optional>
#include <span>
#include <vector>

namespace penseg {

enum class Pruning { None, Inequality };

struct SolverOptions {
    /// Candidate pruning; inequality pruning never changes the optimum.
    Pruning pruning = Pruning::Inequality;
    /// Upper bound on the number of changepoints; disables pruning.
    std::optional<int> max_changes;
    double tolerance = 1e-9;

    void validate() const;
};

/// True when `a` wins the tie-break against `b`.
bool tie_break_prefers(std::span<const int> a, std::span<const int> b);

/// Optimal partitioning for the mean and spike models:
///   F(t) = min_{s<t} F(s) + C(x_{s+1:t}) + beta,  F(0) = -beta.
PenalizedFit detect_partition(const TimeSeries& x, const ModelSpec& model, double beta,
                              const SolverOptions& opts = {});

/// Per-step record of the slope solver, for diagnostics and tests.
struct SlopeTrace {
    /// value_functions[t] is f_t(phi): the best cost of x_{1:t} with fitted
    /// value phi at t (uncapped solves only).
    std::vector<PiecewiseQuadratic> value_functions;
    /// Every candidate quadratic considered at step t, before enveloping.
    std::vector<std::vector<Quadratic>> candidates;
    /// Boundary positions still active after step t.
    std::vector<int> active_count;
};

/// Continuous piecewise-linear fit with a penalty per kink, solved by
/// functional dynamic programming over the knot value.
PenalizedFit detect_slope(const TimeSeries& x, double sigma, double beta, const SolverOptions& opts = {},
                          SlopeTrace* trace = nullptr);

/// Dispatches to detect_partition or detect_slope.
PenalizedFit detect(const TimeSeries& x, const ModelSpec& model, double beta, const SolverOptions& opts = {});

/// Exhaustive search over every changepoint set with at most max_changes
/// changes. Rejects T > 24.
PenalizedFit brute_force_detect(const TimeSeries& x, const ModelSpec& model, double beta, int max_changes,
                                double tolerance = 1e-9);

inline constexpr Eigen::Index kBruteForceMaxLength = 24;

}  // namespace penseg
