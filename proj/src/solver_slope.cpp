#include "penseg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace penseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One quadratic of a stored value function f_t. Each node is the exact cost
// of one knot path, so backtracking follows parent indices alone.
struct Node {
    Quadratic q;
    int source = -1;  // previous knot position s
    int parent = -1;  // index of the node in f_s that produced this one
    int changes = 0;
};

// min over phi' of f(phi') + seg(phi', phi) for a single quadratic f.
Node extend(const Node& from, int from_index, int s, const BivariateQuadratic& seg, double penalty) {
    Node out;
    out.source = s;
    out.parent = from_index;
    out.changes = s > 0 ? from.changes + 1 : 0;
    const double P = from.q.a + seg.ss;
    const double L = from.q.b + seg.s;
    if (P > 0.0) {
        out.q.a = std::max(0.0, seg.ee - seg.se * seg.se / P);
        out.q.b = seg.e - seg.se * L / P;
        out.q.c = seg.c + from.q.c - L * L / (4.0 * P);
    } else {
        // Length-one first segment: the value at knot 0 is free and unused.
        out.q.a = seg.ee;
        out.q.b = seg.e;
        out.q.c = seg.c + from.q.c;
    }
    if (s > 0) out.q.c += penalty;
    return out;
}

struct Layer {
    std::vector<Node> nodes;  // exactly the quadratics present in the envelope
    PiecewiseQuadratic envelope;
};

// Keeps only nodes that own at least one envelope piece; re-indexes pieces.
Layer build_layer(std::vector<Node> candidates) {
    Layer layer;
    if (candidates.empty()) return layer;
    std::vector<Quadratic> qs(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) qs[i] = candidates[i].q;
    PiecewiseQuadratic env = PiecewiseQuadratic::lower_envelope(qs);

    std::vector<int> remap(candidates.size(), -1);
    for (const auto& p : env.pieces()) {
        int& slot = remap[p.source];
        if (slot < 0) {
            slot = static_cast<int>(layer.nodes.size());
            layer.nodes.push_back(candidates[p.source]);
        }
    }
    env.remap_sources(remap);
    layer.envelope = std::move(env);
    return layer;
}

}  // namespace

PenalizedFit detect_slope(const TimeSeries& x, double sigma, double beta, const SolverOptions& opts,
                          SlopeTrace* trace) {
    const ModelSpec model = ModelSpec::slope(sigma);
    model.validate();
    opts.validate();
    if (x.size() < 2) throw InputError("the slope model needs at least two observations");
    if (!x.values().allFinite()) throw InputError("series contains non-finite values");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InputError("penalty must be finite and > 0");

    const int T = static_cast<int>(x.size());
    const bool capped = opts.max_changes.has_value();
    const int K = capped ? std::min(*opts.max_changes, T - 1) : 0;
    const int layers = capped ? K + 1 : 1;
    const bool prune = !capped && opts.pruning == Pruning::Inequality;

    // Shift invariance of the fitted cost lets the solver work on centred data.
    const Eigen::VectorXd centred = x.values().array() - x.values().mean();
    const TimeSeries xc(centred);
    const SlopeCost cost(xc, sigma);

    // f[t][layer]
    std::vector<std::vector<Layer>> f(T + 1, std::vector<Layer>(layers));
    {
        Node origin;
        origin.changes = 0;
        f[0][0].nodes.push_back(origin);
        const Quadratic zero{};
        f[0][0].envelope = PiecewiseQuadratic::lower_envelope(std::span<const Quadratic>(&zero, 1));
    }
    if (trace) {
        trace->value_functions.assign(T + 1, {});
        trace->candidates.assign(T + 1, {});
        trace->active_count.assign(T + 1, 0);
        trace->value_functions[0] = f[0][0].envelope;
    }

    std::vector<int> active{0};
    std::vector<std::vector<Node>> by_layer(layers);
    std::vector<Node> unsorted;  // candidates grouped by ascending s
    for (int t = 1; t <= T; ++t) {
        for (auto& c : by_layer) c.clear();
        // Candidate order sets the tie preference: fewer changes, then earlier s.
        for (int s : active) {
            const BivariateQuadratic seg = cost(s, t);
            for (int l = 0; l < layers; ++l) {
                const auto& nodes = f[s][l].nodes;
                for (std::size_t i = 0; i < nodes.size(); ++i) {
                    Node n = extend(nodes[i], static_cast<int>(i), s, seg, beta);
                    if (capped && n.changes > K) continue;
                    by_layer[capped ? n.changes : 0].push_back(n);
                }
            }
        }
        if (prune) unsorted = by_layer[0];
        for (int l = 0; l < layers; ++l) {
            auto& c = by_layer[l];
            std::stable_sort(c.begin(), c.end(), [](const Node& a, const Node& b) {
                return a.changes != b.changes ? a.changes < b.changes : a.source < b.source;
            });
            if (trace && !capped) {
                auto& out = trace->candidates[t];
                for (const auto& n : c) out.push_back(n.q);
            }
            f[t][l] = build_layer(c);
        }

        if (prune) {
            // Every later path through s is beaten by one that adds a knot at t
            // once s's candidates sit more than beta above f_t everywhere.
            const PiecewiseQuadratic& env = f[t][0].envelope;
            const double bar = beta + opts.tolerance * std::max(1.0, std::abs(env.minimum().value));
            std::vector<int> keep;
            keep.reserve(active.size() + 1);
            std::size_t i = 0;
            for (int s : active) {
                bool useful = false;
                for (; i < unsorted.size() && unsorted[i].source == s; ++i) {
                    if (!useful && !(env.min_gap(unsorted[i].q) > bar)) useful = true;
                }
                if (useful) keep.push_back(s);
            }
            active = std::move(keep);
        }
        active.push_back(t);
        if (trace) {
            if (!capped) trace->value_functions[t] = f[t][0].envelope;
            trace->active_count[t] = static_cast<int>(active.size());
        }
    }

    // Pick the best final layer; lower layers win ties.
    int best_layer = -1;
    PiecewiseQuadratic::Minimum best{kInf, 0.0, -1};
    for (int l = 0; l < layers; ++l) {
        if (f[T][l].envelope.empty()) continue;
        const auto m = f[T][l].envelope.minimum();
        if (best_layer < 0 || m.value < best.value - opts.tolerance * std::max(1.0, std::abs(best.value))) {
            best = m;
            best_layer = l;
        }
    }
    if (best_layer < 0 || !std::isfinite(best.value)) throw NumericError("slope solver produced no finite optimum");

    std::vector<int> cps;
    {
        const auto& piece = f[T][best_layer].envelope.pieces()[best.piece];
        int t = T;
        int layer = best_layer;
        int index = piece.source;
        for (;;) {
            const Node& n = f[t][layer].nodes[index];
            if (n.source <= 0) break;
            cps.push_back(n.source);
            const int s = n.source;
            // The parent lives in f_s at the layer that produced it.
            layer = capped ? n.changes - 1 : 0;
            index = n.parent;
            t = s;
        }
        std::reverse(cps.begin(), cps.end());
    }

    PenalizedFit fit;
    FitResult fr = fit_params(x, model, cps);
    fit.segmentation.changepoints = std::move(cps);
    fit.segmentation.params = std::move(fr.params);
    fit.raw_cost = fr.raw_cost;
    fit.penalty = beta;
    fit.objective = fit.raw_cost + beta * fit.num_changes();
    return fit;
}

}  // namespace penseg
