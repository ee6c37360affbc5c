#include "penseg/core.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace penseg;

namespace {

TimeSeries series(std::initializer_list<double> v) { return TimeSeries(std::vector<double>(v)); }

TimeSeries random_series(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> z;
    std::vector<double> v(n);
    for (auto& e : v) e = z(rng);
    return TimeSeries(v);
}

// Direct residual sum of a linear segment between two knots.
double slope_direct(const TimeSeries& x, int left, int right, double u, double v, double sigma) {
    double total = 0.0;
    for (int t = left + 1; t <= right; ++t) {
        const double fit = u + (v - u) * (t - left) / static_cast<double>(right - left);
        total += (x.at(t) - fit) * (x.at(t) - fit);
    }
    return total / (sigma * sigma);
}

// Random interior changepoint set on 1..n-1.
std::vector<int> random_changepoints(std::mt19937_64& rng, int n) {
    std::vector<int> cps;
    std::bernoulli_distribution coin(0.3);
    for (int t = 1; t < n; ++t)
        if (coin(rng)) cps.push_back(t);
    return cps;
}

// Brute-force minimisation of the knot-value least squares via a dense
// normal system, independent of the tridiagonal solver.
double slope_dense_cost(const TimeSeries& x, const std::vector<int>& cps) {
    const int n = static_cast<int>(x.size());
    std::vector<int> knots{0};
    knots.insert(knots.end(), cps.begin(), cps.end());
    knots.push_back(n);
    const int p = static_cast<int>(knots.size());
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n, p);
    for (int j = 1; j < p; ++j) {
        for (int t = knots[j - 1] + 1; t <= knots[j]; ++t) {
            const double w = (t - knots[j - 1]) / static_cast<double>(knots[j] - knots[j - 1]);
            design(t - 1, j - 1) = 1.0 - w;
            design(t - 1, j) = w;
        }
    }
    const Eigen::VectorXd theta = design.completeOrthogonalDecomposition().solve(x.values());
    return (x.values() - design * theta).squaredNorm();
}

}  // namespace

TEST(ModelSpec, Validation) {
    EXPECT_NO_THROW(ModelSpec::mean(1.0).validate());
    EXPECT_THROW(ModelSpec::mean(0.0).validate(), InputError);
    EXPECT_THROW(ModelSpec::spike(1.0).validate(), InputError);
    EXPECT_THROW(ModelSpec::spike(0.0).validate(), InputError);
    EXPECT_NO_THROW(ModelSpec::spike(0.5).validate());
    ModelSpec bad = ModelSpec::mean();
    bad.alpha = 0.5;
    EXPECT_THROW(bad.validate(), InputError);
    EXPECT_EQ(parse_model_kind("slope"), ModelKind::Slope);
    EXPECT_THROW(parse_model_kind("quadratic"), InputError);
}

TEST(TimeSeries, RejectsNonFiniteAndEmpty) {
    EXPECT_THROW(TimeSeries(std::vector<double>{}), InputError);
    EXPECT_THROW(series({1.0, NAN}), InputError);
    EXPECT_THROW(series({1.0, INFINITY}), InputError);
    const auto x = series({1, 2, 3, 4});
    EXPECT_EQ(x.at(1), 1.0);
    EXPECT_EQ(x.slice(2, 3).size(), 2);
    EXPECT_EQ(x.slice(2, 3).at(1), 2.0);
}

TEST(SegmentCostMean, Examples) {
    EXPECT_DOUBLE_EQ(segment_cost_mean(series({5, 5, 5}), 1, 3, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(segment_cost_mean(series({0, 2}), 1, 2, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(segment_cost_mean(series({0, 2}), 1, 2, 2.0), 0.5);
    EXPECT_THROW(segment_cost_mean(series({0, 2}), 2, 1, 1.0), InputError);
    EXPECT_THROW(segment_cost_mean(series({0, 2}), 1, 3, 1.0), InputError);
}

TEST(SegmentCostSlope, Examples) {
    const auto q1 = segment_cost_slope(series({1, 2}), 0, 2, 1.0);
    EXPECT_NEAR(q1(0.0, 2.0), 0.0, 1e-12);
    const auto q2 = segment_cost_slope(series({0, 0}), 0, 2, 1.0);
    EXPECT_NEAR(q2(0.0, 2.0), 5.0, 1e-12);
    EXPECT_THROW(segment_cost_slope(series({0, 0}), 1, 1, 1.0), InputError);
}

TEST(SegmentCostSlope, MatchesDirectSum) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 4 + rep % 30;
        const auto x = random_series(rng, n);
        std::uniform_int_distribution<int> pick(0, n - 1);
        int l = pick(rng), r = pick(rng);
        if (l == r) continue;
        if (l > r) std::swap(l, r);
        const double sigma = 0.5 + (rep % 3);
        const auto q = segment_cost_slope(x, l, r, sigma);
        const double a = u(rng), b = u(rng);
        const double direct = slope_direct(x, l, r, a, b, sigma);
        EXPECT_NEAR(q(a, b), direct, 1e-10 * std::max(1.0, direct));
        // The prefix-sum evaluator agrees with the direct coefficients.
        const auto fast = SlopeCost(x, sigma)(l, r);
        EXPECT_NEAR(fast(a, b), direct, 1e-9 * std::max(1.0, direct));
    }
}

TEST(SegmentCostSpike, Examples) {
    std::vector<double> decay(5);
    for (int t = 0; t < 5; ++t) decay[t] = 3.0 * std::pow(0.5, t);
    EXPECT_NEAR(segment_cost_spike(TimeSeries(decay), 1, 5, 0.5, 1.0), 0.0, 1e-14);
    // Amplitude 0.8, residuals 0.2 and -0.4.
    EXPECT_NEAR(segment_cost_spike(series({1, 0}), 1, 2, 0.5, 1.0), 0.2, 1e-14);
    EXPECT_NEAR(fit_params(series({1, 0}), ModelSpec::spike(0.5), {}).params[0], 0.8, 1e-14);
    EXPECT_NEAR(segment_cost_spike(series({1, 0}), 1, 2, 0.5, 2.0), 0.05, 1e-14);
}

TEST(TrueCost, AdditiveAndZeroOnSignal) {
    std::mt19937_64 rng(5);
    for (ModelSpec model : {ModelSpec::mean(1.3), ModelSpec::slope(0.7), ModelSpec::spike(0.8, 1.1)}) {
        TruthSpec truth;
        truth.model = model;
        truth.length = 30;
        truth.changepoints = {10, 20};
        truth.params = model.kind == ModelKind::Slope ? Eigen::VectorXd{{0.0, 1.0, -2.0, 3.0}}
                                                      : Eigen::VectorXd{{1.0, 4.0, -2.0}};
        const TimeSeries clean(truth.signal());
        EXPECT_NEAR(true_cost(clean, truth, 1, 30), 0.0, 1e-20);
        const auto noise = random_series(rng, 30);
        const TimeSeries x(Eigen::VectorXd(truth.signal() + noise.values()));
        for (int r = 1; r < 30; ++r) {
            EXPECT_NEAR(true_cost(x, truth, 1, 30), true_cost(x, truth, 1, r) + true_cost(x, truth, r + 1, 30),
                        1e-12);
        }
        const double single = (x.at(7) - truth.signal()[6]) / model.sigma;
        EXPECT_NEAR(true_cost(x, truth, 7, 7), single * single, 1e-14);
    }
}

TEST(TruthSpec, ChangeSizes) {
    TruthSpec mean{ModelSpec::mean(), 10, {5}, Eigen::VectorXd{{1.0, 4.0}}};
    EXPECT_DOUBLE_EQ(mean.change_sizes()[0], 3.0);
    TruthSpec slope{ModelSpec::slope(), 10, {5}, Eigen::VectorXd{{0.0, 5.0, 5.0}}};
    EXPECT_DOUBLE_EQ(slope.change_sizes()[0], 1.0);
    TruthSpec spike{ModelSpec::spike(0.5), 10, {4}, Eigen::VectorXd{{8.0, 3.0}}};
    EXPECT_DOUBLE_EQ(spike.change_sizes()[0], 2.0);  // |3 - 8 * 0.5^3|
    EXPECT_EQ(spike.segment_lengths(), (std::vector<int>{4, 6}));
    TruthSpec zero{ModelSpec::mean(), 10, {5}, Eigen::VectorXd{{1.0, 1.0}}};
    EXPECT_THROW(zero.validate(), InputError);
    TruthSpec wrong_shape{ModelSpec::slope(), 10, {5}, Eigen::VectorXd{{1.0, 2.0}}};
    EXPECT_THROW(wrong_shape.validate(), InputError);
}

TEST(FitParams, Examples) {
    const auto m = fit_params(series({1, 2, 3}), ModelSpec::mean(), {});
    EXPECT_DOUBLE_EQ(m.params[0], 2.0);
    EXPECT_DOUBLE_EQ(m.raw_cost, 2.0);

    const std::vector<int> kink{4};
    const auto s = fit_params(series({0, 1, 2, 3, 2, 1, 0}), ModelSpec::slope(), kink);
    EXPECT_NEAR(s.raw_cost, 0.0, 1e-20);
    EXPECT_NEAR(s.params[0], -1.0, 1e-12);
    EXPECT_NEAR(s.params[1], 3.0, 1e-12);
    EXPECT_NEAR(s.params[2], 0.0, 1e-12);

    std::vector<double> spike{4, 2, 1, 6, 3, 1.5};
    const std::vector<int> cps{3};
    const auto sp = fit_params(TimeSeries(spike), ModelSpec::spike(0.5), cps);
    EXPECT_NEAR(sp.raw_cost, 0.0, 1e-20);
    EXPECT_NEAR(sp.params[1], 6.0, 1e-12);
}

TEST(FitParams, SlopeMatchesDenseLeastSquares) {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 300; ++rep) {
        const int n = 2 + rep % 25;
        const auto x = random_series(rng, n);
        const auto cps = random_changepoints(rng, n);
        const double dense = slope_dense_cost(x, cps);
        const auto fit = fit_params(x, ModelSpec::slope(), cps);
        EXPECT_NEAR(fit.raw_cost, dense, 1e-9 * std::max(1.0, dense));
        // Parameters reproduce the reported cost.
        const Eigen::VectorXd f = signal_from_params(ModelSpec::slope(), n, cps, fit.params);
        EXPECT_NEAR((x.values() - f).squaredNorm(), fit.raw_cost, 1e-9 * std::max(1.0, dense));
    }
}

TEST(CostProperties, SplitInequality) {
    std::mt19937_64 rng(17);
    for (ModelSpec model : {ModelSpec::mean(), ModelSpec::slope(), ModelSpec::spike(0.7)}) {
        for (int rep = 0; rep < 100; ++rep) {
            const int n = 3 + rep % 15;
            const auto x = random_series(rng, n);
            const double whole = fit_params(x, model, {}).raw_cost;
            // A lone point fits exactly under a free line.
            auto piece = [&](int a, int b) {
                if (model.kind == ModelKind::Slope && a == b) return 0.0;
                return fit_params(x.slice(a, b), model, {}).raw_cost;
            };
            for (int r = 1; r < n; ++r) EXPECT_GE(whole + 1e-9, piece(1, r) + piece(r + 1, n));
        }
    }
}

TEST(CostProperties, FittedBelowTrue) {
    std::mt19937_64 rng(21);
    TruthSpec truth{ModelSpec::mean(), 20, {8}, Eigen::VectorXd{{0.0, 2.0}}};
    for (int rep = 0; rep < 50; ++rep) {
        const TimeSeries x(Eigen::VectorXd(truth.signal() + random_series(rng, 20).values()));
        EXPECT_LE(fit_params(x, truth.model, truth.changepoints).raw_cost, true_cost(x, truth, 1, 20) + 1e-12);
    }
}

TEST(CostProperties, ShiftAndScale) {
    std::mt19937_64 rng(9);
    const auto x = random_series(rng, 20);
    const TimeSeries shifted(Eigen::VectorXd(x.values().array() + 7.5));
    const std::vector<int> cps{6, 13};
    for (ModelSpec model : {ModelSpec::mean(), ModelSpec::slope()}) {
        EXPECT_NEAR(fit_params(x, model, cps).raw_cost, fit_params(shifted, model, cps).raw_cost, 1e-9);
    }
    EXPECT_GT(std::abs(fit_params(x, ModelSpec::spike(0.6), cps).raw_cost -
                       fit_params(shifted, ModelSpec::spike(0.6), cps).raw_cost),
              1e-3);
    for (ModelSpec model : {ModelSpec::mean(), ModelSpec::slope(), ModelSpec::spike(0.6)}) {
        ModelSpec scaled = model;
        scaled.sigma = 2.5;
        EXPECT_NEAR(fit_params(x, scaled, cps).raw_cost, fit_params(x, model, cps).raw_cost / 6.25, 1e-10);
    }
}

TEST(MeanCost, MatchesDirect) {
    std::mt19937_64 rng(2);
    const auto x = random_series(rng, 40);
    const MeanCost cost(x, 1.5);
    for (int s = 0; s < 40; ++s)
        for (int t = s + 1; t <= 40; ++t)
            EXPECT_NEAR(cost(s, t), segment_cost_mean(x, s + 1, t, 1.5), 1e-9);
}

TEST(Changepoints, Validation) {
    EXPECT_NO_THROW(check_changepoints(std::vector<int>{1, 2}, 3));
    EXPECT_THROW(check_changepoints(std::vector<int>{0}, 3), InputError);
    EXPECT_THROW(check_changepoints(std::vector<int>{3}, 3), InputError);
    EXPECT_THROW(check_changepoints(std::vector<int>{2, 2}, 5), InputError);
    EXPECT_EQ(param_count(ModelKind::Slope, 2), 4);
    EXPECT_EQ(param_count(ModelKind::Mean, 2), 3);
}
