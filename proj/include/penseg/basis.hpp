#pragma once

// Orthonormal basis of R^{2n} adapted to a slope change in the middle of a
// window of 2n points: constant, linear, kink-at-n, then kinks at further
// positions orthogonalised against everything before them.

#include "penseg/core.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace penseg {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct ClosedFormBasis {
    Vec<Scalar> constant;
    Vec<Scalar> linear;
    Vec<Scalar> kink;  // kink at the window midpoint n
};

template <typename Scalar = double>
ClosedFormBasis<Scalar> basis_closed_forms(int n) {
    if (n < 2) throw InputError("basis windows need n >= 2");
    using std::sqrt;
    const Scalar N = n, M = 2 * n;
    ClosedFormBasis<Scalar> b;
    b.constant = Vec<Scalar>::Constant(2 * n, Scalar(1) / sqrt(M));
    const Scalar lin_scale = sqrt(Scalar(12) / (M * (M - 1) * (M + 1)));
    b.linear.resize(2 * n);
    b.kink.resize(2 * n);
    const Scalar common = N * (4 * N * N - 1) * (2 * N * N + 1);
    const Scalar left = -sqrt(3 * (N + 1) / (common * (N - 1)));
    const Scalar right = sqrt(3 * (N - 1) / (common * (N + 1)));
    for (int i = 1; i <= 2 * n; ++i) {
        const Scalar I = i;
        b.linear[i - 1] = lin_scale * (I - (M + 1) / 2);
        b.kink[i - 1] = i <= n ? left * ((4 * N - 1) * I - N * (2 * N + 1))
                               : right * ((4 * N + 1) * I - 3 * N * (2 * N + 1));
    }
    return b;
}

/// (i - tau)_+ for i = 1..length.
template <typename Scalar = double>
Vec<Scalar> kink_vector(int length, int tau) {
    Vec<Scalar> v(length);
    for (int i = 1; i <= length; ++i) v[i - 1] = i > tau ? Scalar(i - tau) : Scalar(0);
    return v;
}

template <typename Scalar = double>
class BasisWindow {
public:
    explicit BasisWindow(int n) : n_(n) {
        auto closed = basis_closed_forms<Scalar>(n);
        vectors_ = {std::move(closed.constant), std::move(closed.linear), std::move(closed.kink)};
    }

    int half_width() const { return n_; }
    int dimension() const { return 2 * n_; }
    const std::vector<Vec<Scalar>>& vectors() const { return vectors_; }
    const std::vector<int>& extensions() const { return used_; }

    /// Positions still available: {2..2n} without n and without used ones.
    /// Position 1 is excluded because (i - 1)_+ lies in span(constant, linear).
    std::vector<int> admissible() const {
        std::vector<int> out;
        for (int tau = 2; tau <= 2 * n_; ++tau)
            if (is_admissible(tau)) out.push_back(tau);
        return out;
    }

    bool is_admissible(int tau) const {
        return tau >= 2 && tau <= 2 * n_ && tau != n_ && std::find(used_.begin(), used_.end(), tau) == used_.end();
    }

    /// Orthonormalises the kink at tau against the current family (two
    /// modified Gram-Schmidt passes) and appends it. Throws InputError for an
    /// inadmissible tau and NumericError when the kink is in the current span.
    const Vec<Scalar>& extend(int tau) {
        if (!is_admissible(tau)) throw InputError("kink position is not admissible");
        Vec<Scalar> v = kink_vector<Scalar>(2 * n_, tau);
        const Scalar original = v.norm();
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : vectors_) v -= q.dot(v) * q;
        const Scalar residual = v.norm();
        if (!(residual > Scalar(1e-8) * std::max(original, Scalar(1))))
            throw NumericError("kink vector is numerically dependent on the current basis");
        used_.push_back(tau);
        vectors_.push_back(v / residual);
        return vectors_.back();
    }

    /// Extends with every admissible position in increasing order; returns
    /// the positions rejected as dependent.
    std::vector<int> extend_all() {
        std::vector<int> dependent;
        for (int tau : admissible()) {
            try {
                extend(tau);
            } catch (const NumericError&) {
                dependent.push_back(tau);
            }
        }
        return dependent;
    }

    /// max |<psi_a, psi_b> - [a == b]|.
    Scalar orthonormality_defect() const {
        Scalar worst = 0;
        using std::abs;
        for (std::size_t a = 0; a < vectors_.size(); ++a)
            for (std::size_t b = a; b < vectors_.size(); ++b)
                worst = std::max(worst, abs(vectors_[a].dot(vectors_[b]) - Scalar(a == b ? 1 : 0)));
        return worst;
    }

    /// Coefficients <x, psi_k> for every basis vector.
    Vec<Scalar> project(const Vec<Scalar>& x) const {
        Vec<Scalar> c(vectors_.size());
        for (std::size_t k = 0; k < vectors_.size(); ++k) c[k] = vectors_[k].dot(x);
        return c;
    }

private:
    int n_;
    std::vector<Vec<Scalar>> vectors_;
    std::vector<int> used_;
};

struct SampleSummary {
    double mean = 0.0;
    double variance = 0.0;
    double standard_error = 0.0;  // of the mean
    double expected_mean = 0.0;
    double ks_distance = 0.0;
    double ks_p_value = 0.0;
};

struct BasisIdentityReport {
    int n = 0;
    int replicates = 0;
    double delta = 0.0;
    double sigma = 1.0;
    double noncentrality = 0.0;
    SampleSummary true_minus_fit;   // L*(S) - L(S; tau*) against chi2_3
    SampleSummary null_minus_fit;   // L(S; none) - L(S; tau*) against chi2_1(nu)
    SampleSummary no_change_window; // L*(S') - L(S'; n, n + ceil(n/2)) against chi2_4
    double max_identity_error = 0.0;  // |L* - L(tau*) - sum of three squared coefficients|
    double max_coefficient_correlation = 0.0;
    double orthonormality_defect = 0.0;
};

/// Simulates single-kink slope windows of 2n points with slope change delta
/// and checks the cost identities through the fitting code, independently of
/// the basis, then reconciles each replicate with the basis projection.
BasisIdentityReport cost_identities_check(int n, double delta, double sigma, int replicates, std::uint64_t seed,
                                          int threads = 1);

}  // namespace penseg
