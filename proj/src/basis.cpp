#include "penseg/basis.hpp"

#include "parallel.hpp"
#include "penseg/distributions.hpp"
#include "penseg/rng.hpp"
#include "penseg/simlab.hpp"
#include "penseg/theory.hpp"

#include <cmath>

namespace penseg {

BasisIdentityReport cost_identities_check(int n, double delta, double sigma, int replicates, std::uint64_t seed,
                                          int threads) {
    if (replicates < 500) throw InputError("the identity check needs at least 500 replicates");
    const ModelSpec model = ModelSpec::slope(sigma);
    const WindowSpec spec{model, n, delta};
    const TruthSpec truth = window_truth(spec);
    const int len = 2 * n;

    BasisWindow<double> basis(n);
    basis.extend_all();
    const auto dim = static_cast<Eigen::Index>(basis.vectors().size());

    BasisIdentityReport report;
    report.n = n;
    report.replicates = replicates;
    report.delta = delta;
    report.sigma = sigma;
    report.noncentrality = noncentrality_slope_delta(delta, n, sigma);
    report.orthonormality_defect = basis.orthonormality_defect();

    const std::vector<int> change{n};
    const std::vector<int> two_changes{n, n + (n + 1) / 2};
    const bool second_window = n + (n + 1) / 2 < len;

    std::vector<double> star(replicates), null(replicates), flat(replicates), identity_error(replicates);
    Eigen::MatrixXd coefficients(replicates, dim);
    const Eigen::VectorXd signal = truth.signal();
    detail::parallel_for(replicates, threads, [&](int r) {
        Philox4x32 rng(seed, static_cast<std::uint64_t>(r));
        Eigen::VectorXd z(len);
        for (int i = 0; i < len; ++i) z[i] = rng.normal();
        const TimeSeries x(Eigen::VectorXd(signal + sigma * z));
        const double fitted = fit_params(x, model, change).raw_cost;
        const double true_minus = z.squaredNorm() - fitted;
        star[r] = true_minus;
        null[r] = fit_params(x, model, {}).raw_cost - fitted;
        const Eigen::VectorXd c = basis.project(z);
        coefficients.row(r) = c.transpose();
        identity_error[r] = std::abs(true_minus - c.head(3).squaredNorm());
        if (second_window) {
            const TimeSeries noise(Eigen::VectorXd(sigma * z));
            flat[r] = z.squaredNorm() - fit_params(noise, model, two_changes).raw_cost;
        }
    });

    for (double e : identity_error) report.max_identity_error = std::max(report.max_identity_error, e);
    const Eigen::RowVectorXd mean = coefficients.colwise().mean();
    const Eigen::MatrixXd centred = coefficients.rowwise() - mean;
    const Eigen::MatrixXd cov = centred.transpose() * centred / (replicates - 1.0);
    for (Eigen::Index a = 0; a < dim; ++a)
        for (Eigen::Index b = a + 1; b < dim; ++b) {
            const double denom = std::sqrt(cov(a, a) * cov(b, b));
            if (denom > 0.0)
                report.max_coefficient_correlation = std::max(report.max_coefficient_correlation, std::abs(cov(a, b)) / denom);
        }

    const double nu = report.noncentrality;
    report.true_minus_fit = summarize(std::move(star), 3.0, [](double v) { return chisq_cdf(3, v); });
    report.null_minus_fit = summarize(std::move(null), 1.0 + nu, [nu](double v) { return noncentral_chisq1_cdf(nu, v); });
    if (second_window)
        report.no_change_window = summarize(std::move(flat), 4.0, [](double v) { return chisq_cdf(4, v); });
    return report;
}

}  // namespace penseg
