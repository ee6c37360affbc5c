#include "penseg/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace penseg {

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Mean:
            return "mean";
        case ModelKind::Slope:
            return "slope";
        case ModelKind::Spike:
            return "spike";
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
    if (name == "mean") return ModelKind::Mean;
    if (name == "slope") return ModelKind::Slope;
    if (name == "spike") return ModelKind::Spike;
    throw InputError("unknown model '" + std::string(name) + "' (expected mean, slope or spike)");
}

ModelSpec ModelSpec::mean(double sigma) { return {ModelKind::Mean, sigma, std::nullopt}; }
ModelSpec ModelSpec::slope(double sigma) { return {ModelKind::Slope, sigma, std::nullopt}; }
ModelSpec ModelSpec::spike(double alpha, double sigma) { return {ModelKind::Spike, sigma, alpha}; }

void ModelSpec::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw InputError("sigma must be positive and finite");
    }
    if (kind == ModelKind::Spike) {
        if (!alpha) throw InputError("spike model requires a decay rate alpha");
        if (!(*alpha > 0.0 && *alpha < 1.0)) throw InputError("alpha must lie strictly inside (0, 1)");
    } else if (alpha) {
        throw InputError("alpha is only meaningful for the spike model");
    }
}

double ModelSpec::decay() const {
    if (kind != ModelKind::Spike || !alpha) throw InputError("decay rate requested for a non-spike model");
    return *alpha;
}

TimeSeries::TimeSeries(Eigen::VectorXd values) : values_(std::move(values)) {
    if (values_.size() < 1) throw InputError("a time series needs at least one observation");
    if (!values_.allFinite()) throw InputError("time series contains non-finite values");
}

TimeSeries::TimeSeries(const std::vector<double>& values)
    : TimeSeries(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                                    static_cast<Eigen::Index>(values.size())))) {}

TimeSeries TimeSeries::slice(Eigen::Index s, Eigen::Index e) const {
    if (s < 1 || e > size() || s > e) throw InputError("invalid slice range");
    return TimeSeries(Eigen::VectorXd(values_.segment(s - 1, e - s + 1)));
}

void check_changepoints(std::span<const int> changepoints, Eigen::Index length) {
    int prev = 0;
    for (int cp : changepoints) {
        if (cp <= prev || cp >= length) {
            throw InputError("changepoints must be strictly increasing and inside (0, T)");
        }
        prev = cp;
    }
}

Eigen::Index param_count(ModelKind kind, int num_changes) {
    return kind == ModelKind::Slope ? num_changes + 2 : num_changes + 1;
}

Eigen::VectorXd signal_from_params(const ModelSpec& model, Eigen::Index length,
                                   std::span<const int> changepoints,
                                   const Eigen::VectorXd& params) {
    const int m = static_cast<int>(changepoints.size());
    if (params.size() != param_count(model.kind, m)) {
        throw InputError("parameter block has the wrong length for this model");
    }
    Eigen::VectorXd f(length);
    for (int j = 0; j <= m; ++j) {
        const Eigen::Index left = j == 0 ? 0 : changepoints[j - 1];
        const Eigen::Index right = j == m ? length : changepoints[j];
        for (Eigen::Index t = left + 1; t <= right; ++t) {
            switch (model.kind) {
                case ModelKind::Mean:
                    f[t - 1] = params[j];
                    break;
                case ModelKind::Slope:
                    f[t - 1] = params[j] + (params[j + 1] - params[j]) * static_cast<double>(t - left) /
                                               static_cast<double>(right - left);
                    break;
                case ModelKind::Spike:
                    f[t - 1] = params[j] * std::pow(model.decay(), static_cast<double>(t - left - 1));
                    break;
            }
        }
    }
    return f;
}

void TruthSpec::validate() const {
    model.validate();
    if (length < 1) throw InputError("truth length must be at least 1");
    check_changepoints(changepoints, length);
    if (params.size() != param_count(model.kind, num_changes())) {
        throw InputError("truth parameter block has the wrong length for this model");
    }
    if (!params.allFinite()) throw InputError("truth parameters must be finite");
    for (double d : change_sizes()) {
        if (!(d > 0.0)) throw InputError("every true change must have a positive size");
    }
}

std::vector<int> TruthSpec::segment_lengths() const {
    std::vector<int> out;
    int prev = 0;
    for (int cp : changepoints) {
        out.push_back(cp - prev);
        prev = cp;
    }
    out.push_back(length - prev);
    return out;
}

std::vector<double> TruthSpec::change_sizes() const {
    const int m = num_changes();
    const auto lens = segment_lengths();
    std::vector<double> out;
    out.reserve(m);
    for (int j = 1; j <= m; ++j) {
        switch (model.kind) {
            case ModelKind::Mean:
                out.push_back(std::abs(params[j] - params[j - 1]));
                break;
            case ModelKind::Slope: {
                const double before = (params[j] - params[j - 1]) / lens[j - 1];
                const double after = (params[j + 1] - params[j]) / lens[j];
                out.push_back(std::abs(after - before));
                break;
            }
            case ModelKind::Spike:
                out.push_back(std::abs(params[j] - params[j - 1] * std::pow(model.decay(), lens[j - 1] - 1)));
                break;
        }
    }
    return out;
}

Eigen::VectorXd TruthSpec::signal() const {
    return signal_from_params(model, length, changepoints, params);
}

namespace {

void check_range(const TimeSeries& x, Eigen::Index s, Eigen::Index e) {
    if (s < 1 || e > x.size() || s > e) throw InputError("invalid segment range");
}

// Solves the symmetric tridiagonal system with diagonal d and off-diagonal u
// by LDL^T elimination.
Eigen::VectorXd solve_tridiagonal(Eigen::VectorXd d, const Eigen::VectorXd& u, Eigen::VectorXd rhs) {
    const Eigen::Index n = d.size();
    for (Eigen::Index i = 1; i < n; ++i) {
        if (!(d[i - 1] > 0.0)) throw NumericError("singular knot-value normal equations");
        const double l = u[i - 1] / d[i - 1];
        d[i] -= l * u[i - 1];
        rhs[i] -= l * rhs[i - 1];
    }
    if (!(d[n - 1] > 0.0)) throw NumericError("singular knot-value normal equations");
    Eigen::VectorXd sol(n);
    sol[n - 1] = rhs[n - 1] / d[n - 1];
    for (Eigen::Index i = n - 2; i >= 0; --i) sol[i] = (rhs[i] - u[i] * sol[i + 1]) / d[i];
    return sol;
}

Eigen::VectorXd fit_slope_knots(const TimeSeries& x, std::span<const int> changepoints) {
    // Knot values are shift-equivariant, so fit on centred data.
    const double centre = x.values().mean();
    const TimeSeries centred(Eigen::VectorXd(x.values().array() - centre));
    const SlopeCost cost(centred, 1.0);

    const int m = static_cast<int>(changepoints.size());
    const Eigen::Index n = m + 2;
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd off = Eigen::VectorXd::Zero(n - 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (int j = 0; j <= m; ++j) {
        const Eigen::Index left = j == 0 ? 0 : changepoints[j - 1];
        const Eigen::Index right = j == m ? x.size() : changepoints[j];
        const BivariateQuadratic q = cost(left, right);
        diag[j] += q.ss;
        diag[j + 1] += q.ee;
        off[j] += q.se;
        rhs[j] -= 0.5 * q.s;
        rhs[j + 1] -= 0.5 * q.e;
    }

    Eigen::VectorXd theta(n);
    if (diag[0] > 0.0) {
        theta = solve_tridiagonal(diag, off, rhs);
    } else {
        // A first segment of length one carries no information about the
        // value at knot 0; extend the second knot value flat.
        theta.tail(n - 1) = solve_tridiagonal(diag.tail(n - 1), off.tail(n - 2), rhs.tail(n - 1));
        theta[0] = theta[1];
    }
    return theta.array() + centre;
}

}  // namespace

double segment_cost_mean(const TimeSeries& x, Eigen::Index s, Eigen::Index e, double sigma) {
    check_range(x, s, e);
    const auto seg = x.values().segment(s - 1, e - s + 1);
    const double mean = seg.mean();
    return (seg.array() - mean).square().sum() / (sigma * sigma);
}

double segment_cost_spike(const TimeSeries& x, Eigen::Index s, Eigen::Index e, double alpha,
                          double sigma) {
    check_range(x, s, e);
    double num = 0.0, den = 0.0, w = 1.0;
    for (Eigen::Index t = s; t <= e; ++t) {
        num += x.at(t) * w;
        den += w * w;
        w *= alpha;
    }
    const double theta = num / den;
    double cost = 0.0;
    w = 1.0;
    for (Eigen::Index t = s; t <= e; ++t) {
        const double r = x.at(t) - theta * w;
        cost += r * r;
        w *= alpha;
    }
    return cost / (sigma * sigma);
}

BivariateQuadratic segment_cost_slope(const TimeSeries& x, Eigen::Index knot_left,
                                      Eigen::Index knot_right, double sigma) {
    if (knot_left >= knot_right) throw InputError("slope segment must have positive length");
    check_range(x, knot_left + 1, knot_right);
    return SlopeCost(x, sigma)(knot_left, knot_right);
}

double true_cost(const TimeSeries& x, const TruthSpec& truth, Eigen::Index s, Eigen::Index e) {
    check_range(x, s, e);
    if (truth.length != x.size()) throw InputError("truth length does not match the data");
    const Eigen::VectorXd f = truth.signal();
    const double var = truth.model.sigma * truth.model.sigma;
    return (x.values().segment(s - 1, e - s + 1) - f.segment(s - 1, e - s + 1)).squaredNorm() / var;
}

FitResult fit_params(const TimeSeries& x, const ModelSpec& model, std::span<const int> changepoints) {
    model.validate();
    check_changepoints(changepoints, x.size());
    const int m = static_cast<int>(changepoints.size());

    FitResult out;
    out.params.resize(param_count(model.kind, m));
    switch (model.kind) {
        case ModelKind::Mean:
            for (int j = 0; j <= m; ++j) {
                const Eigen::Index left = j == 0 ? 0 : changepoints[j - 1];
                const Eigen::Index right = j == m ? x.size() : changepoints[j];
                out.params[j] = x.values().segment(left, right - left).mean();
            }
            break;
        case ModelKind::Slope:
            if (x.size() < 2) throw InputError("the slope model needs at least two observations");
            out.params = fit_slope_knots(x, changepoints);
            break;
        case ModelKind::Spike: {
            const double alpha = model.decay();
            for (int j = 0; j <= m; ++j) {
                const Eigen::Index left = j == 0 ? 0 : changepoints[j - 1];
                const Eigen::Index right = j == m ? x.size() : changepoints[j];
                double num = 0.0, den = 0.0, w = 1.0;
                for (Eigen::Index t = left + 1; t <= right; ++t) {
                    num += x.at(t) * w;
                    den += w * w;
                    w *= alpha;
                }
                out.params[j] = num / den;
            }
            break;
        }
    }
    const Eigen::VectorXd f = signal_from_params(model, x.size(), changepoints, out.params);
    out.raw_cost = (x.values() - f).squaredNorm() / (model.sigma * model.sigma);
    if (!std::isfinite(out.raw_cost)) throw NumericError("non-finite segmentation cost");
    return out;
}

MeanCost::MeanCost(const TimeSeries& x, double sigma)
    : sum_(x.size() + 1), sum_sq_(x.size() + 1), inv_var_(1.0 / (sigma * sigma)) {
    const double centre = x.values().mean();
    sum_[0] = sum_sq_[0] = 0.0;
    for (Eigen::Index t = 1; t <= x.size(); ++t) {
        const double v = x.at(t) - centre;
        sum_[t] = sum_[t - 1] + v;
        sum_sq_[t] = sum_sq_[t - 1] + v * v;
    }
}

double MeanCost::operator()(Eigen::Index s, Eigen::Index t) const {
    const double n = static_cast<double>(t - s);
    const double sx = sum_[t] - sum_[s];
    const double cost = (sum_sq_[t] - sum_sq_[s]) - sx * sx / n;
    return cost > 0.0 ? cost * inv_var_ : 0.0;
}

SlopeCost::SlopeCost(const TimeSeries& x, double sigma)
    : sum_(x.size() + 1),
      sum_ix_(x.size() + 1),
      sum_sq_(x.size() + 1),
      offset_(0.5 * static_cast<double>(x.size() + 1)),
      inv_var_(1.0 / (sigma * sigma)) {
    sum_[0] = sum_ix_[0] = sum_sq_[0] = 0.0;
    for (Eigen::Index i = 1; i <= x.size(); ++i) {
        const double v = x.at(i);
        sum_[i] = sum_[i - 1] + v;
        sum_ix_[i] = sum_ix_[i - 1] + (static_cast<double>(i) - offset_) * v;
        sum_sq_[i] = sum_sq_[i - 1] + v * v;
    }
}

BivariateQuadratic SlopeCost::operator()(Eigen::Index s, Eigen::Index t) const {
    const double len = static_cast<double>(t - s);
    const double sx = sum_[t] - sum_[s];
    // sum over the segment of x_i (i - s) / len
    const double sxw = ((sum_ix_[t] - sum_ix_[s]) - (static_cast<double>(s) - offset_) * sx) / len;
    BivariateQuadratic q;
    q.ss = (len - 1.0) * (2.0 * len - 1.0) / (6.0 * len) * inv_var_;
    q.se = (len + 1.0) * (len - 1.0) / (6.0 * len) * inv_var_;
    q.ee = (len + 1.0) * (2.0 * len + 1.0) / (6.0 * len) * inv_var_;
    q.s = -2.0 * (sx - sxw) * inv_var_;
    q.e = -2.0 * sxw * inv_var_;
    q.c = (sum_sq_[t] - sum_sq_[s]) * inv_var_;
    return q;
}

}  // namespace penseg
