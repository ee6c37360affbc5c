#include "penseg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace penseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Fills cost[i] = C(x_{active[i]+1 .. t}) for the sorted boundary list.
class SegmentCosts {
public:
    SegmentCosts(const TimeSeries& x, const ModelSpec& model)
        : x_(x), model_(model) {
        if (model.kind == ModelKind::Mean) mean_.emplace(x, model.sigma);
    }

    void row(std::span<const int> active, int t, std::vector<double>& cost) const {
        cost.resize(active.size());
        if (model_.kind == ModelKind::Mean) {
            for (std::size_t i = 0; i < active.size(); ++i) cost[i] = (*mean_)(active[i], t);
            return;
        }
        // Spike: sweep the segment start backwards from t so the weighted sum
        // A = sum_i x_i alpha^{i-start} never needs alpha^t.
        const double alpha = model_.decay();
        const double alpha_sq = alpha * alpha;
        const double inv_var = 1.0 / (model_.sigma * model_.sigma);
        double weighted = 0.0, weight = 0.0, sum_sq = 0.0;
        int u = t + 1;
        for (std::size_t k = active.size(); k-- > 0;) {
            const int start = active[k] + 1;
            while (u > start) {
                --u;
                const double xu = x_.at(u);
                weighted = xu + alpha * weighted;
                weight = 1.0 + alpha_sq * weight;
                sum_sq += xu * xu;
            }
            cost[k] = std::max(0.0, sum_sq - weighted * weighted / weight) * inv_var;
        }
    }

private:
    const TimeSeries& x_;
    const ModelSpec& model_;
    std::optional<MeanCost> mean_;
};

std::vector<int> backtrack(const std::vector<int>& last, int t) {
    std::vector<int> cps;
    for (int s = last[t]; s > 0; s = last[s]) cps.push_back(s);
    std::reverse(cps.begin(), cps.end());
    return cps;
}

void check_inputs(const TimeSeries& x, double beta, const SolverOptions& opts) {
    if (x.size() < 1) throw InputError("series must contain at least one observation");
    if (!x.values().allFinite()) throw InputError("series contains non-finite values");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InputError("penalty must be finite and > 0");
    opts.validate();
}

PenalizedFit assemble(const TimeSeries& x, const ModelSpec& model, double beta, std::vector<int> cps) {
    PenalizedFit fit;
    FitResult fr = fit_params(x, model, cps);
    fit.segmentation.changepoints = std::move(cps);
    fit.segmentation.params = std::move(fr.params);
    fit.raw_cost = fr.raw_cost;
    fit.penalty = beta;
    fit.objective = fit.raw_cost + beta * fit.num_changes();
    return fit;
}

// Candidate `s` beats the incumbent at t: strictly lower, or tied and its
// changepoint vector wins the tie-break.
bool better(double value, double incumbent, double tol, const std::vector<int>& last, int s, int incumbent_s) {
    if (incumbent_s < 0) return true;
    const double scale = tol * std::max(1.0, std::abs(incumbent));
    if (value < incumbent - scale) return true;
    if (value > incumbent + scale) return false;
    auto a = backtrack(last, s);
    if (s > 0) a.push_back(s);
    auto b = backtrack(last, incumbent_s);
    if (incumbent_s > 0) b.push_back(incumbent_s);
    return tie_break_prefers(a, b);
}

PenalizedFit solve_uncapped(const TimeSeries& x, const ModelSpec& model, double beta, const SolverOptions& opts) {
    const int T = static_cast<int>(x.size());
    const SegmentCosts costs(x, model);
    std::vector<double> F(T + 1, kInf);
    std::vector<int> last(T + 1, -1);
    F[0] = -beta;
    last[0] = 0;
    std::vector<int> active{0};
    std::vector<double> row;
    for (int t = 1; t <= T; ++t) {
        costs.row(active, t, row);
        int best_s = -1;
        double best = kInf;
        for (std::size_t i = 0; i < active.size(); ++i) {
            const int s = active[i];
            const double v = F[s] + row[i] + beta;
            if (better(v, best, opts.tolerance, last, s, best_s)) {
                best = v;
                best_s = s;
            }
        }
        F[t] = best;
        last[t] = best_s;
        if (opts.pruning == Pruning::Inequality) {
            const double bar = F[t] + opts.tolerance * std::max(1.0, std::abs(F[t]));
            std::size_t keep = 0;
            for (std::size_t i = 0; i < active.size(); ++i) {
                if (F[active[i]] + row[i] <= bar) active[keep++] = active[i];
            }
            active.resize(keep);
        }
        active.push_back(t);
    }
    return assemble(x, model, beta, backtrack(last, T));
}

// Segment neighbourhood search: G[k][t] is the best cost of x_{1:t} with
// exactly k changes.
PenalizedFit solve_capped(const TimeSeries& x, const ModelSpec& model, double beta, const SolverOptions& opts) {
    const int T = static_cast<int>(x.size());
    const int K = std::min(*opts.max_changes, T - 1);
    const SegmentCosts costs(x, model);
    std::vector<std::vector<double>> G(K + 1, std::vector<double>(T + 1, kInf));
    std::vector<std::vector<int>> last(K + 1, std::vector<int>(T + 1, -1));

    auto path = [&](int k, int t) {
        std::vector<int> cps;
        for (; k > 0; --k) {
            t = last[k][t];
            cps.push_back(t);
        }
        std::reverse(cps.begin(), cps.end());
        return cps;
    };

    std::vector<int> all(T);
    std::vector<double> row;
    for (int t = 1; t <= T; ++t) {
        all.resize(t);
        for (int s = 0; s < t; ++s) all[s] = s;
        costs.row(all, t, row);
        G[0][t] = row[0];
        last[0][t] = 0;
        for (int k = 1; k <= std::min(K, t - 1); ++k) {
            for (int s = k; s < t; ++s) {
                const double v = G[k - 1][s] + row[s];
                const double cur = G[k][t];
                const double scale = opts.tolerance * std::max(1.0, std::abs(cur));
                bool take = last[k][t] < 0 || v < cur - scale;
                if (!take && v <= cur + scale) {
                    auto a = path(k - 1, s);
                    a.push_back(s);
                    take = tie_break_prefers(a, path(k, t));
                }
                if (take) {
                    G[k][t] = v;
                    last[k][t] = s;
                }
            }
        }
    }

    int best_k = 0;
    for (int k = 1; k <= K; ++k) {
        if (last[k][T] < 0) continue;
        const double v = G[k][T] + k * beta;
        const double cur = G[best_k][T] + best_k * beta;
        if (v < cur - opts.tolerance * std::max(1.0, std::abs(cur))) best_k = k;
    }
    return assemble(x, model, beta, path(best_k, T));
}

}  // namespace

void SolverOptions::validate() const {
    if (!(tolerance > 0.0)) throw InputError("solver tolerance must be > 0");
    if (max_changes && *max_changes < 0) throw InputError("max_changes must be >= 0");
}

bool tie_break_prefers(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

PenalizedFit detect_partition(const TimeSeries& x, const ModelSpec& model, double beta, const SolverOptions& opts) {
    model.validate();
    if (model.kind == ModelKind::Slope) throw InputError("detect_partition handles the mean and spike models only");
    check_inputs(x, beta, opts);
    if (opts.max_changes) return solve_capped(x, model, beta, opts);
    return solve_uncapped(x, model, beta, opts);
}

PenalizedFit detect(const TimeSeries& x, const ModelSpec& model, double beta, const SolverOptions& opts) {
    model.validate();
    if (model.kind == ModelKind::Slope) return detect_slope(x, model.sigma, beta, opts);
    return detect_partition(x, model, beta, opts);
}

}  // namespace penseg
