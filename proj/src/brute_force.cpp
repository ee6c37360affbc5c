#include "penseg/solver.hpp"

#include <cmath>
#include <limits>

namespace penseg {

PenalizedFit brute_force_detect(const TimeSeries& x, const ModelSpec& model, double beta, int max_changes,
                                double tolerance) {
    model.validate();
    const Eigen::Index T = x.size();
    if (T < 1) throw InputError("series must contain at least one observation");
    if (T > kBruteForceMaxLength) throw InputError("brute force is limited to T <= 24");
    if (model.kind == ModelKind::Slope && T < 2) throw InputError("the slope model needs at least two observations");
    if (!x.values().allFinite()) throw InputError("series contains non-finite values");
    if (!(beta > 0.0)) throw InputError("penalty must be > 0");
    if (max_changes < 0) throw InputError("max_changes must be >= 0");

    const int n = static_cast<int>(T);
    const int cap = std::min(max_changes, n - 1);

    // Partition models: direct per-segment costs, tabulated once.
    Eigen::MatrixXd table;
    if (model.kind != ModelKind::Slope) {
        table.setZero(n + 1, n + 1);
        for (int s = 0; s < n; ++s) {
            for (int e = s + 1; e <= n; ++e) {
                table(s, e) = model.kind == ModelKind::Mean ? segment_cost_mean(x, s + 1, e, model.sigma)
                                                            : segment_cost_spike(x, s + 1, e, model.decay(), model.sigma);
            }
        }
    }
    auto raw_cost = [&](const std::vector<int>& cps) {
        if (model.kind == ModelKind::Slope) return fit_params(x, model, cps).raw_cost;
        double total = 0.0;
        int s = 0;
        for (int c : cps) {
            total += table(s, c);
            s = c;
        }
        return total + table(s, n);
    };

    std::vector<int> best_cps;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> cps;
    auto consider = [&]() {
        const double v = raw_cost(cps) + beta * static_cast<double>(cps.size());
        const double scale = tolerance * std::max(1.0, std::abs(best));
        if (!std::isfinite(best) || v < best - scale || (v <= best + scale && tie_break_prefers(cps, best_cps))) {
            best = v;
            best_cps = cps;
        }
    };
    auto visit = [&](auto&& self, int next) -> void {
        consider();
        if (static_cast<int>(cps.size()) == cap) return;
        for (int c = next; c < n; ++c) {
            cps.push_back(c);
            self(self, c + 1);
            cps.pop_back();
        }
    };
    visit(visit, 1);

    PenalizedFit fit;
    FitResult fr = fit_params(x, model, best_cps);
    fit.segmentation.changepoints = std::move(best_cps);
    fit.segmentation.params = std::move(fr.params);
    fit.raw_cost = fr.raw_cost;
    fit.penalty = beta;
    fit.objective = fit.raw_cost + beta * fit.num_changes();
    return fit;
}

}  // namespace penseg
