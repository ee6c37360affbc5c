// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Thresholds are pinned below and never adapted to the data.

#include "penseg/basis.hpp"
#include "penseg/rng.hpp"
#include "penseg/simlab.hpp"
#include "penseg/solver.hpp"
#include "penseg/theory.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

using namespace penseg;

namespace {

// Oracle equivalence.
constexpr int kOracleInstances = 500;
constexpr double kOracleRelTol = 1e-7;

// Empirical consistency.
constexpr int kLength = 500;
constexpr int kReplicates = 200;
constexpr double kEpsilon = 0.2;
constexpr double kBetaFactor = 2.0 + kEpsilon;
constexpr double kMeanDelta = 3.0;
constexpr double kMeanMinCorrect = 0.95;
constexpr double kMeanMinLocated = 0.90;
constexpr double kSlopeDelta = 0.2;
constexpr double kSlopeMinCorrect = 0.90;
constexpr double kSlopeMinLocated = 0.85;
constexpr double kSpikeAlpha = 0.95;
constexpr double kSpikeDelta = 5.0;
constexpr double kSpikeMinCorrect = 0.90;

// Window identities and basis.
constexpr int kWindowReplicates = 2000;
constexpr int kSlopeHalfWidth = 20;
constexpr double kSlopeWindowDelta = 0.05;
constexpr double kKsLevel = 0.01;
constexpr double kMeanSeMultiple = 3.0;
constexpr double kNuAgreement = 1e-10;
constexpr double kOrthonormalityTol = 1e-9;
constexpr double kNullingTol = 1e-8;
constexpr double kIdentityTol = 1e-8;

// Tail bounds.
constexpr int kTailDraws = 100000;
constexpr double kTailSeMultiple = 3.0;

// Penalty sensitivity.
constexpr double kOverEstimateMin = 0.30;

const int kThreads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

Outcome oracle_equivalence() {
    Outcome out;
    Philox4x32 rng(20240601, 0);
    int checked = 0, mismatched = 0;
    double worst = 0.0;
    for (const ModelKind kind : {ModelKind::Mean, ModelKind::Slope, ModelKind::Spike}) {
        const int max_length = kind == ModelKind::Slope ? 14 : 16;
        for (int i = 0; i < kOracleInstances; ++i) {
            const int length = 6 + static_cast<int>(rng.uniform() * (max_length - 5));
            const double sigma = 0.5 + 1.5 * rng.uniform();
            ModelSpec model;
            switch (kind) {
                case ModelKind::Mean: model = ModelSpec::mean(sigma); break;
                case ModelKind::Slope: model = ModelSpec::slope(sigma); break;
                case ModelKind::Spike: model = ModelSpec::spike(0.3 + 0.65 * rng.uniform(), sigma); break;
            }
            const int changes = static_cast<int>(rng.uniform() * 3);
            const double delta = (kind == ModelKind::Slope ? 0.5 : 2.0) * (0.5 + 2.5 * rng.uniform());
            const auto truth = evenly_spaced_truth(model, length, changes, delta);
            const auto x = generate(truth, 7, static_cast<std::uint64_t>(checked));
            const double beta = (0.3 + 2.7 * rng.uniform()) * std::log(static_cast<double>(length));

            const auto dp = detect(x, model, beta);
            const auto bf = brute_force_detect(x, model, beta, length - 1);
            const double rel = std::abs(dp.objective - bf.objective) / std::max(1.0, std::abs(bf.objective));
            worst = std::max(worst, rel);
            if (rel > kOracleRelTol || dp.segmentation.changepoints != bf.segmentation.changepoints) ++mismatched;
            ++checked;
        }
    }
    out.require(mismatched == 0, std::to_string(mismatched) + " mismatches");
    out.note(std::to_string(checked) + " instances, worst relative gap " + fmt(worst));
    return out;
}

McConfig consistency_config(const ModelSpec& model, double delta, std::uint64_t seed) {
    McConfig c;
    c.truth = evenly_spaced_truth(model, kLength, 2, delta);
    c.beta = kBetaFactor * std::log(static_cast<double>(kLength));
    c.replicates = kReplicates;
    c.seed = seed;
    c.threads = kThreads;
    return c;
}

// Fraction of correct-count replicates with scaled error at most `bound`.
double located_fraction(const McReport& r, double bound) {
    if (r.scaled_errors.empty()) return 0.0;
    const auto hits = std::count_if(r.scaled_errors.begin(), r.scaled_errors.end(), [&](double e) { return e <= bound; });
    return static_cast<double>(hits) / static_cast<double>(r.scaled_errors.size());
}

Outcome mean_consistency() {
    Outcome out;
    const auto config = consistency_config(ModelSpec::mean(1.0), kMeanDelta, 101);
    out.require(config.truth.changepoints == std::vector<int>({167, 333}), "true changepoints");
    const auto r = run_mc(config);
    const double bound = (16.0 + 10.0 * kEpsilon) * std::log(static_cast<double>(kLength));
    const double located = located_fraction(r, bound);
    out.require(r.m_correct_prob >= kMeanMinCorrect, "m_hat == m* rate");
    out.require(located >= kMeanMinLocated, "located rate");
    out.note("m_hat == m* in " + fmt(r.m_correct_prob) + ", error <= " + fmt(bound) + " in " + fmt(located));
    return out;
}

Outcome slope_consistency() {
    Outcome out;
    const auto config = consistency_config(ModelSpec::slope(1.0), kSlopeDelta, 202);
    const auto r = run_mc(config);
    const double bound = (200.0 + 350.0 * kEpsilon / 3.0) * std::log(static_cast<double>(kLength));
    const double located = located_fraction(r, bound);
    out.require(r.m_correct_prob >= kSlopeMinCorrect, "m_hat == m* rate");
    out.require(located >= kSlopeMinLocated, "located rate");
    out.note("m_hat == m* in " + fmt(r.m_correct_prob) + ", error <= " + fmt(bound) + " in " + fmt(located));
    return out;
}

Outcome spike_consistency() {
    Outcome out;
    const ModelSpec model = ModelSpec::spike(kSpikeAlpha, 1.0);
    const auto config = consistency_config(model, kSpikeDelta, 303);
    const auto& cps = config.truth.changepoints;
    const int min_spacing = std::min({cps[0], cps[1] - cps[0], kLength - cps[1]});
    const double strength = signal_strength(model, kSpikeDelta, min_spacing);
    const double needed = (8.0 + 5.0 * kEpsilon) * std::log(static_cast<double>(kLength));
    if (!(strength >= needed)) {
        out.require(false, "signal strength " + fmt(strength) + " below " + fmt(needed) + ", not run");
        return out;
    }
    const auto r = run_mc(config);
    out.require(r.m_correct_prob >= kSpikeMinCorrect, "m_hat == m* rate");
    out.note("strength " + fmt(strength) + " >= " + fmt(needed) + ", m_hat == m* in " + fmt(r.m_correct_prob));
    return out;
}

// Residual sum of squares of `y` after least squares on the columns of `design`.
double residual_ss(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);
    return (y - design * coef).squaredNorm();
}

Outcome distributional_identities() {
    Outcome out;
    const auto slope = cost_identities_check(kSlopeHalfWidth, kSlopeWindowDelta, 1.0, kWindowReplicates, 505, kThreads);

    const double chi3_band = kMeanSeMultiple * std::sqrt(6.0 / kWindowReplicates);
    out.require(std::abs(slope.true_minus_fit.mean - 3.0) <= chi3_band, "slope chi2_3 mean");
    out.require(slope.true_minus_fit.ks_p_value >= kKsLevel, "slope chi2_3 KS");

    // Independent noncentrality: residual of a single straight line fitted to
    // the noiseless kinked window.
    const int len = 2 * kSlopeHalfWidth;
    Eigen::MatrixXd line(len, 2);
    Eigen::VectorXd kinked(len);
    for (int i = 1; i <= len; ++i) {
        line(i - 1, 0) = 1.0;
        line(i - 1, 1) = i;
        kinked[i - 1] = i > kSlopeHalfWidth ? kSlopeWindowDelta * (i - kSlopeHalfWidth) : 0.0;
    }
    const double nu_oracle = residual_ss(line, kinked);
    out.require(std::abs(slope.noncentrality - nu_oracle) <= 1e-10 * std::max(1.0, nu_oracle), "slope nu oracle");
    out.require(std::abs(slope.null_minus_fit.mean - (1.0 + nu_oracle)) <=
                    kMeanSeMultiple * slope.null_minus_fit.standard_error,
                "slope 1 + nu mean");

    double worst_nu = 0.0;
    for (int n = 2; n <= 100; ++n) {
        const double d = 0.37;
        const double a = noncentrality_slope_delta(d, n);
        const double b = noncentrality_slope_knots(1.5, 1.5 + 0.2 * n, 1.5 + 0.4 * n + d * n, n);
        worst_nu = std::max(worst_nu, std::abs(a - b) / std::max(1.0, std::abs(a)));
    }
    out.require(worst_nu <= kNuAgreement, "slope nu forms agree");

    std::string windows;
    for (const WindowSpec spec : {WindowSpec{ModelSpec::mean(1.0), 10, 1.0}, WindowSpec{ModelSpec::spike(0.8, 1.0), 10, 1.0}}) {
        const auto w = window_check(spec, kWindowReplicates, 606, kThreads);
        const double dof = w.true_minus_fit_dof;
        const std::string name(to_string(spec.model.kind));
        out.require(std::abs(w.true_minus_fit.mean - dof) <= kMeanSeMultiple * std::sqrt(2.0 * dof / kWindowReplicates),
                    name + " central mean");
        out.require(w.true_minus_fit.ks_p_value >= kKsLevel, name + " central KS");
        out.require(std::abs(w.null_minus_fit.mean - (1.0 + w.noncentrality)) <=
                        kMeanSeMultiple * w.null_minus_fit.standard_error,
                    name + " 1 + nu mean");
        out.require(w.null_minus_fit.ks_p_value >= kKsLevel, name + " non-central KS");
        windows += ", " + name + " KS p " + fmt(w.true_minus_fit.ks_p_value, 3) + "/" + fmt(w.null_minus_fit.ks_p_value, 3);
    }
    // Mean window oracle: n delta^2 / 2 by direct least squares.
    {
        const int n = 10;
        Eigen::MatrixXd one = Eigen::MatrixXd::Ones(2 * n, 1);
        Eigen::VectorXd step = Eigen::VectorXd::Zero(2 * n);
        step.tail(n).setOnes();
        out.require(std::abs(window_noncentrality({ModelSpec::mean(1.0), n, 1.0}) - residual_ss(one, step)) <= 1e-12,
                    "mean nu oracle");
    }

    out.note("chi2_3 mean " + fmt(slope.true_minus_fit.mean) + " KS p " + fmt(slope.true_minus_fit.ks_p_value, 3) +
             ", 1 + nu " + fmt(1.0 + nu_oracle) + " vs " + fmt(slope.null_minus_fit.mean) + ", nu forms " +
             fmt(worst_nu, 2) + windows);
    return out;
}

Outcome basis_properties() {
    Outcome out;
    double worst_defect = 0.0, worst_nulling = 0.0;
    for (const int n : {2, 10, 100}) {
        BasisWindow<double> window(n);
        const auto dependent = window.extend_all();
        out.require(static_cast<int>(window.vectors().size()) == 2 * n, "full extension at 2n = " + std::to_string(2 * n));
        out.require(dependent == std::vector<int>{2 * n}, "dependent set at 2n = " + std::to_string(2 * n));
        worst_defect = std::max(worst_defect, window.orthonormality_defect());

        // Continuous line with one kink at the window midpoint.
        Eigen::VectorXd signal(2 * n);
        for (int i = 1; i <= 2 * n; ++i) signal[i - 1] = 0.7 - 0.03 * i + 0.05 * std::max(0, i - n);
        const auto c = window.project(signal);
        worst_nulling = std::max(worst_nulling, c.tail(c.size() - 3).cwiseAbs().maxCoeff());
    }
    out.require(worst_defect <= kOrthonormalityTol, "orthonormality");
    out.require(worst_nulling <= kNullingTol, "signal nulling");
    const auto ident = cost_identities_check(kSlopeHalfWidth, kSlopeWindowDelta, 1.0, 500, 707, kThreads);
    out.require(ident.max_identity_error <= kIdentityTol, "cost identity");
    out.note("defect " + fmt(worst_defect, 2) + ", nulling " + fmt(worst_nulling, 2) + ", identity error " +
             fmt(ident.max_identity_error, 2));
    return out;
}

Outcome tail_domination() {
    Outcome out;
    int points = 0, violations = 0;
    double worst_margin = -1.0;
    std::uint64_t stream = 0;
    for (const int k : {1, 2, 3, 5, 10}) {
        for (const double nu : {0.0, 1.0, 4.0, 16.0}) {
            Philox4x32 rng(808, stream++);
            std::vector<double> draws(kTailDraws);
            const double shift = std::sqrt(nu);
            for (auto& d : draws) {
                double s = 0.0;
                for (int i = 0; i < k; ++i) {
                    const double z = rng.normal() + (i == 0 ? shift : 0.0);
                    s += z * z;
                }
                d = s;
            }
            auto check = [&](double p_hat, double bound) {
                const double se = std::sqrt(bound * (1.0 - bound) / kTailDraws);
                const double margin = p_hat - (bound + kTailSeMultiple * se);
                worst_margin = std::max(worst_margin, margin);
                ++points;
                if (margin > 0.0) ++violations;
            };
            if (nu == 0.0) {
                for (const double x : {k + 0.5, 1.5 * k + 1.0, 2.0 * k + 2.0, 3.0 * k + 6.0, 5.0 * k + 15.0}) {
                    const auto b = chisq_tail_bounds(k, x, 0.0, 0.0);
                    if (!b.upper_valid) continue;
                    const double p = std::count_if(draws.begin(), draws.end(), [&](double d) { return d >= x; }) /
                                     static_cast<double>(kTailDraws);
                    check(p, b.upper);
                }
            }
            for (const double frac : {0.1, 0.3, 0.5, 0.7, 0.9}) {
                const double y = frac * (k + nu);
                const auto b = chisq_tail_bounds(k, k + 1.0, nu, y);
                if (!b.lower_valid) continue;
                const double p = std::count_if(draws.begin(), draws.end(), [&](double d) { return d <= y; }) /
                                 static_cast<double>(kTailDraws);
                check(p, b.lower);
            }
        }
    }
    out.require(violations == 0, std::to_string(violations) + " grid points above bound");
    out.note(std::to_string(points) + " grid points, largest excess over bound + 3 se " + fmt(worst_margin, 3));
    return out;
}

Outcome penalty_sensitivity() {
    Outcome out;
    const double log_length = std::log(static_cast<double>(kLength));
    std::vector<double> means;
    double over = 0.0;
    for (const double factor : {0.5, 1.0, 2.2, 4.0}) {
        auto config = consistency_config(ModelSpec::mean(1.0), kMeanDelta, 101);
        config.beta = factor * log_length;
        const auto r = run_mc(config);
        means.push_back(r.mean_m_hat);
        if (factor == 0.5) {
            int count = 0;
            for (std::size_t m = 3; m < r.m_hat_histogram.size(); ++m) count += r.m_hat_histogram[m];
            over = static_cast<double>(count) / r.replicates;
        }
    }
    out.require(std::is_sorted(means.rbegin(), means.rend()), "mean m_hat non-increasing in beta");
    out.require(over >= kOverEstimateMin, "over-estimation at 0.5 log T");
    std::string list;
    for (double m : means) list += (list.empty() ? "" : ", ") + fmt(m);
    out.note("mean m_hat [" + list + "], over-estimate rate " + fmt(over));
    return out;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "oracle equivalence", oracle_equivalence},
        {2, "mean consistency", mean_consistency},
        {3, "slope consistency", slope_consistency},
        {4, "spike consistency", spike_consistency},
        {5, "distributional identities", distributional_identities},
        {6, "basis properties", basis_properties},
        {7, "tail-bound domination", tail_domination},
        {8, "penalty sensitivity", penalty_sensitivity},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failures;
        std::printf("[%s] criterion %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                    secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
