#pragma once

// Lower envelopes of univariate quadratics, the value-function representation
// used by the continuity-constrained slope solver.

#include <limits>
#include <span>
#include <vector>

namespace penseg {

/// a x^2 + b x + c
struct Quadratic {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;

    double operator()(double x) const { return (a * x + b) * x + c; }
    double derivative(double x) const { return 2.0 * a * x + b; }
    /// Minimiser over [lo, hi]; infinite bounds allowed.
    double argmin(double lo = -std::numeric_limits<double>::infinity(),
                  double hi = std::numeric_limits<double>::infinity()) const;
    double min(double lo = -std::numeric_limits<double>::infinity(),
               double hi = std::numeric_limits<double>::infinity()) const;
};

inline Quadratic operator-(const Quadratic& p, const Quadratic& q) {
    return {p.a - q.a, p.b - q.b, p.c - q.c};
}

class PiecewiseQuadratic {
public:
    /// One interval [lo, hi) of the envelope. `source` indexes the quadratic
    /// in the list the envelope was built from.
    struct Piece {
        double lo;
        double hi;
        Quadratic q;
        int source;
    };

    PiecewiseQuadratic() = default;

    /// Pointwise minimum of `quadratics` over the whole real line. Ties are
    /// resolved towards the lower index, so callers list candidates in order
    /// of preference. Every input must have a >= 0.
    static PiecewiseQuadratic lower_envelope(std::span<const Quadratic> quadratics);

    const std::vector<Piece>& pieces() const { return pieces_; }
    bool empty() const { return pieces_.empty(); }

    double operator()(double x) const;
    const Piece& piece_at(double x) const;

    struct Minimum {
        double value;
        double x;
        int piece;
    };
    Minimum minimum() const;

    /// min over x of (q(x) - this(x)); -inf when unbounded below.
    double min_gap(const Quadratic& q) const;

    /// Replaces every piece's source index i by mapping[i].
    void remap_sources(std::span<const int> mapping);

    /// Largest mismatch between the pieces' quadratics at interior boundaries.
    double continuity_defect() const;

private:
    std::vector<Piece> pieces_;
};

}  // namespace penseg
