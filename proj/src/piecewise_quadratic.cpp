#include "penseg/piecewise_quadratic.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace penseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Coefficients this small relative to the operands are treated as zero.
constexpr double kCoeffTol = 1e-13;
// Roots closer than this (relative) are merged.
constexpr double kRootTol = 1e-12;

bool negligible(double value, double scale) { return std::abs(value) <= kCoeffTol * scale; }

// Is p below q on (-inf, -inf + delta)?
bool lower_at_minus_infinity(const Quadratic& p, const Quadratic& q) {
    const double sa = std::max({std::abs(p.a), std::abs(q.a), 1.0});
    if (!negligible(p.a - q.a, sa)) return p.a < q.a;
    const double sb = std::max({std::abs(p.b), std::abs(q.b), 1.0});
    if (!negligible(p.b - q.b, sb)) return p.b > q.b;
    return p.c < q.c;
}

// Is p strictly below q just to the right of x, given they agree at x?
bool lower_after(const Quadratic& p, const Quadratic& q, double x) {
    const double dp = p.derivative(x), dq = q.derivative(x);
    const double scale = std::max({std::abs(dp), std::abs(dq), 1.0});
    if (!negligible(dp - dq, scale)) return dp < dq;
    return p.a < q.a;
}

// Smallest r > from where d = other - current turns negative; +inf if none.
double next_crossing(const Quadratic& d, double from, double scale_a, double scale_b) {
    const bool has_a = !negligible(d.a, scale_a);
    const bool has_b = !negligible(d.b, scale_b);
    double r = kInf;
    if (!has_a) {
        if (!has_b) return kInf;
        if (d.b < 0.0) r = -d.c / d.b;  // decreasing line crosses zero once
        else return kInf;
    } else {
        const double disc = d.b * d.b - 4.0 * d.a * d.c;
        if (!(disc > 0.0)) return kInf;  // touches but never dips below
        const double sq = std::sqrt(disc);
        const double qq = -0.5 * (d.b + std::copysign(sq, d.b));
        double r1 = qq / d.a;
        double r2 = qq != 0.0 ? d.c / qq : -r1;
        if (r1 > r2) std::swap(r1, r2);
        // Convex difference is negative between the roots, concave outside.
        r = d.a > 0.0 ? r1 : r2;
        if (d.a > 0.0 && !(r1 > from) && r2 > from) {
            // Already below between the roots; rounding put `from` past r1.
            return kInf;
        }
    }
    if (!std::isfinite(from)) return r;
    const double tol = kRootTol * std::max(1.0, std::abs(from));
    return r > from + tol ? r : kInf;
}

}  // namespace

double Quadratic::argmin(double lo, double hi) const {
    if (a > 0.0) return std::clamp(-b / (2.0 * a), lo, hi);
    if (b > 0.0) return lo;
    if (b < 0.0) return hi;
    return std::isfinite(lo) ? lo : (std::isfinite(hi) ? hi : 0.0);
}

double Quadratic::min(double lo, double hi) const {
    if (a > 0.0) return (*this)(argmin(lo, hi));
    if (a < 0.0 || b != 0.0) {
        if (!std::isfinite(lo) || !std::isfinite(hi)) {
            const bool unbounded = a < 0.0 || (b > 0.0 && !std::isfinite(lo)) || (b < 0.0 && !std::isfinite(hi));
            if (unbounded) return -kInf;
        }
        return std::min((*this)(lo), (*this)(hi));
    }
    return c;
}

PiecewiseQuadratic PiecewiseQuadratic::lower_envelope(std::span<const Quadratic> quadratics) {
    PiecewiseQuadratic out;
    if (quadratics.empty()) return out;

    double sa = 1.0, sb = 1.0;
    for (const auto& q : quadratics) {
        assert(q.a >= 0.0);
        sa = std::max(sa, std::abs(q.a));
        sb = std::max(sb, std::abs(q.b));
    }

    const int n = static_cast<int>(quadratics.size());
    int current = 0;
    for (int j = 1; j < n; ++j) {
        if (lower_at_minus_infinity(quadratics[j], quadratics[current])) current = j;
    }

    double from = -kInf;
    // Each pair of quadratics crosses at most twice.
    const std::size_t max_pieces = 2 * static_cast<std::size_t>(n) * static_cast<std::size_t>(n) + 1;
    for (;;) {
        double best = kInf;
        int next = -1;
        for (int j = 0; j < n; ++j) {
            if (j == current) continue;
            const Quadratic d = quadratics[j] - quadratics[current];
            const double r = next_crossing(d, from, sa, sb);
            if (!std::isfinite(r)) continue;
            const double tol = kRootTol * std::max(1.0, std::abs(r));
            if (r < best - tol) {
                best = r;
                next = j;
            } else if (std::abs(r - best) <= tol) {
                if (lower_after(quadratics[j], quadratics[next], best) ||
                    (!lower_after(quadratics[next], quadratics[j], best) && j < next)) {
                    next = j;
                }
            }
        }
        if (next < 0 || out.pieces_.size() + 1 >= max_pieces) {
            out.pieces_.push_back({from, kInf, quadratics[current], current});
            break;
        }
        out.pieces_.push_back({from, best, quadratics[current], current});
        from = best;
        current = next;
    }
    return out;
}

const PiecewiseQuadratic::Piece& PiecewiseQuadratic::piece_at(double x) const {
    assert(!pieces_.empty());
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), x,
                               [](double v, const Piece& p) { return v < p.hi; });
    if (it == pieces_.end()) --it;
    return *it;
}

double PiecewiseQuadratic::operator()(double x) const { return piece_at(x).q(x); }

PiecewiseQuadratic::Minimum PiecewiseQuadratic::minimum() const {
    Minimum best{kInf, 0.0, -1};
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const auto& p = pieces_[i];
        const double x = p.q.argmin(p.lo, p.hi);
        const double v = p.q(x);
        if (v < best.value) best = {v, x, static_cast<int>(i)};
    }
    return best;
}

double PiecewiseQuadratic::min_gap(const Quadratic& q) const {
    double best = kInf;
    for (const auto& p : pieces_) {
        best = std::min(best, (q - p.q).min(p.lo, p.hi));
        if (best == -kInf) break;
    }
    return best;
}

void PiecewiseQuadratic::remap_sources(std::span<const int> mapping) {
    for (auto& p : pieces_) p.source = mapping[static_cast<std::size_t>(p.source)];
}

double PiecewiseQuadratic::continuity_defect() const {
    double worst = 0.0;
    for (std::size_t i = 1; i < pieces_.size(); ++i) {
        const double x = pieces_[i].lo;
        worst = std::max(worst, std::abs(pieces_[i].q(x) - pieces_[i - 1].q(x)));
    }
    return worst;
}

}  // namespace penseg
