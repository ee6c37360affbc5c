#include "penseg/distributions.hpp"
#include "penseg/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace penseg;

TEST(Distributions, NormalCdf) {
    EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
    EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
    EXPECT_NEAR(normal_cdf(-1.0), 0.15865525393145707, 1e-14);
}

// Closed forms for small k: chi2_1 = 2 Phi(sqrt x) - 1, chi2_2 = 1 - e^{-x/2}.
TEST(Distributions, ChisqCdfClosedForms) {
    for (double x : {0.01, 0.5, 1.0, 3.0, 9.0, 30.0}) {
        EXPECT_NEAR(chisq_cdf(1, x), 2.0 * normal_cdf(std::sqrt(x)) - 1.0, 1e-13);
        EXPECT_NEAR(chisq_cdf(2, x), -std::expm1(-x / 2.0), 1e-13);
        EXPECT_NEAR(chisq_cdf(4, x), 1.0 - std::exp(-x / 2.0) * (1.0 + x / 2.0), 1e-13);
    }
    EXPECT_NEAR(chisq_cdf(3, 7.814727903251178), 0.95, 1e-10);
    EXPECT_EQ(chisq_cdf(3, 0.0), 0.0);
    EXPECT_EQ(chisq_cdf(3, -1.0), 0.0);
}

// Simulation oracle: (Z + sqrt(nu))^2.
TEST(Distributions, NoncentralChisqOne) {
    EXPECT_NEAR(noncentral_chisq1_cdf(0.0, 2.0), chisq_cdf(1, 2.0), 1e-14);
    Philox4x32 g(5);
    const double nu = 4.0;
    const int n = 200000;
    int below = 0;
    for (int i = 0; i < n; ++i) {
        const double v = g.normal() + std::sqrt(nu);
        below += v * v <= 5.0;
    }
    const double p = noncentral_chisq1_cdf(nu, 5.0);
    EXPECT_NEAR(static_cast<double>(below) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Distributions, KolmogorovSurvival) {
    EXPECT_NEAR(kolmogorov_survival(1.358), 0.05, 5e-4);
    EXPECT_NEAR(kolmogorov_survival(1.628), 0.01, 2e-4);
    EXPECT_EQ(kolmogorov_survival(0.0), 1.0);
}

TEST(Distributions, KsRejectsWrongLaw) {
    Philox4x32 g(9);
    std::vector<double> z(2000);
    for (auto& v : z) v = g.normal() + 0.2;
    EXPECT_LT(ks_test(std::span<double>(z), normal_cdf).p_value, 0.01);
}
