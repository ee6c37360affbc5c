#include "penseg/distributions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace penseg {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double chisq_cdf(int k, double x) {
    if (k < 1) throw std::invalid_argument("degrees of freedom must be >= 1");
    if (!(x > 0.0)) return 0.0;
    const double h = 0.5 * x;
    // Upper tail from the finite series of the regularised incomplete gamma
    // function at integer and half-integer shape.
    double tail = 0.0;
    if (k % 2 == 0) {
        double term = std::exp(-h);
        for (int j = 0; j < k / 2; ++j) {
            tail += term;
            term *= h / (j + 1);
        }
    } else {
        tail = std::erfc(std::sqrt(h));
        double term = std::exp(-h) * std::sqrt(h) / std::tgamma(1.5);
        for (int j = 0; j < (k - 1) / 2; ++j) {
            tail += term;
            term *= h / (j + 1.5);
        }
    }
    return std::clamp(1.0 - tail, 0.0, 1.0);
}

double noncentral_chisq1_cdf(double nu, double x) {
    if (!(x > 0.0)) return 0.0;
    const double r = std::sqrt(x), m = std::sqrt(nu);
    return std::clamp(normal_cdf(r - m) - normal_cdf(-r - m), 0.0, 1.0);
}

double kolmogorov_survival(double lambda) {
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += (j % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-17) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

}  // namespace penseg
