#pragma once

// Reference distributions for the Monte Carlo checks, in closed form.

#include <span>

namespace penseg {

double normal_cdf(double x);

/// P(chi2_k <= x) for integer k >= 1.
double chisq_cdf(int k, double x);

/// P(chi2_1(nu) <= x) for the non-central law with one degree of freedom.
double noncentral_chisq1_cdf(double nu, double x);

/// Kolmogorov asymptotic survival function P(K > lambda).
double kolmogorov_survival(double lambda);

struct KsResult {
    double distance;
    double p_value;
};

/// One-sample Kolmogorov-Smirnov statistic of `sample` (sorted in place)
/// against `cdf`, with the small-sample corrected asymptotic p-value.
template <typename Cdf>
KsResult ks_test(std::span<double> sample, Cdf cdf);

}  // namespace penseg

#include <algorithm>
#include <cmath>

namespace penseg {

template <typename Cdf>
KsResult ks_test(std::span<double> sample, Cdf cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    const double root = std::sqrt(n);
    return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d)};
}

}  // namespace penseg
