#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "taylorstaff/arrivals.hpp"
#include "taylorstaff/errors.hpp"
#include "taylorstaff/intensity.hpp"
#include "taylorstaff/service.hpp"

namespace taylorstaff {

struct ArrivalMoments {
    double mean = 0.0;
    double variance = 0.0;
    double cod = 1.0;
};

// Mean, variance and coefficient of dispersion of A(t) under the stationary start.
inline ArrivalMoments arrival_moments(const GcirParams& p, double t) {
    require(std::holds_alternative<InitStationary>(p.init), "arrival moments are available for the stationary start only");
    validate_dynamic(p);
    require(t > 0.0, "t must be > 0");
    ArrivalMoments out;
    out.mean = p.lambda * t;
    if (p.sigma == 0.0) {
        out.variance = out.mean;
        out.cod = 1.0;
        return out;
    }
    const double kt = p.kappa * t;
    // 1 - (1 - e^{-kt})/(kt), expm1 keeps precision for small kt
    const double shape = 1.0 + std::expm1(-kt) / kt;
    const double s2 = p.sigma * p.sigma;
    out.cod = 1.0 + s2 * std::pow(p.lambda, p.alpha) / (p.kappa * p.kappa) * shape;
    out.variance = out.mean * out.cod;
    return out;
}

// Small-kappa*t approximation of the CoD: 1 + sigma^2 t^(1-alpha) (lambda t)^alpha / (2 kappa).
inline double cod_small_kt(const GcirParams& p, double t) {
    return 1.0 + p.sigma * p.sigma * std::pow(t, 1.0 - p.alpha) * std::pow(p.lambda * t, p.alpha) / (2.0 * p.kappa);
}

// log E_pi[exp(-theta A(t))]. Valid for theta slightly below 0 as long as the square root stays real.
inline double log_laplace_A(const GcirParams& p, double theta, double t) {
    validate_dynamic(p);
    if (p.sigma == 0.0 || p.kappa == 0.0) throw DegenerateLaw("laplace_A needs sigma > 0; use poisson_laplace");
    require(t >= 0.0, "t must be >= 0");
    const double u = -std::expm1(-theta);
    const double s2la = p.sigma * p.sigma * std::pow(p.lambda, p.alpha);
    const double gamma = 2.0 * p.kappa * std::pow(p.lambda, 1.0 - p.alpha) / (p.sigma * p.sigma);
    const double eta2 = p.kappa * p.kappa + 2.0 * s2la * u;
    require(eta2 > 0.0, "theta outside the domain of the transform");
    const double eta = std::sqrt(eta2);
    const double em = std::exp(-eta * t);
    const double denom = (eta + p.kappa) + (eta - p.kappa) * em;  // e^{-eta t} times the original denominator
    const double log_phi = std::log(2.0 * eta) + 0.5 * t * (p.kappa - eta) - std::log(denom);
    const double psi = -2.0 * u * std::expm1(-eta * t) / denom;
    return gamma * log_phi - gamma * std::log1p(s2la * psi / (2.0 * p.kappa));
}

inline double laplace_A(const GcirParams& p, double theta, double t) {
    require(theta >= 0.0, "theta must be >= 0");
    return std::exp(log_laplace_A(p, theta, t));
}

inline double poisson_laplace(double lambda, double theta, double t) {
    return std::exp(-lambda * t * (-std::expm1(-theta)));
}

enum class OuInit { stationary, fixed };

inline double ou_cov(double kappa, double sigma, OuInit init, double s, double v) {
    require(kappa > 0.0, "kappa must be > 0");
    const double base = sigma * sigma / (2.0 * kappa);
    const double c = std::exp(-kappa * std::abs(s - v));
    if (init == OuInit::stationary) return base * c;
    return base * (c - std::exp(-kappa * (s + v)));
}

struct V1Options {
    OuInit init = OuInit::stationary;
    bool force_quadrature = false;
    double rel_tol = 1e-6;
    double tail = 1e-8;
};

// V1(t) = 2 int_0^t int_0^s Fbar(t-s) Fbar(t-v) Cov[U(s), U(v)] dv ds; t = +inf for the limit.
inline double v1(const ServiceDistSpec& service, double kappa, double sigma, double t, const V1Options& opt = {}) {
    service.validate();
    require(kappa > 0.0, "kappa must be > 0");
    require(t > 0.0, "t must be > 0");
    if (sigma == 0.0) return 0.0;
    const bool infinite = std::isinf(t);
    if (infinite && service.family == ServiceFamily::exponential && !opt.force_quadrature) {
        const double mu = service.mu();
        return sigma * sigma / (2.0 * kappa * mu * (mu + kappa));
    }
    double upper = t;
    if (infinite) upper = std::max(-std::log(opt.tail) / kappa, service.survival_quantile(opt.tail));
    const double c0 = sigma * sigma / (2.0 * kappa);
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    const bool fixed = opt.init == OuInit::fixed && !infinite;
    // u = t - s, w = t - v with w >= u
    auto inner = [&](double u) {
        auto f = [&](double w) {
            double c = std::exp(-kappa * (w - u));
            if (fixed) c -= std::exp(-kappa * (2.0 * t - u - w));
            return service.survival(w) * c;
        };
        return GK::integrate(f, u, upper, 20, opt.rel_tol * 1e-2);
    };
    auto outer = [&](double u) { return service.survival(u) * inner(u); };
    double err = 0.0;
    const double val = GK::integrate(outer, 0.0, upper, 20, opt.rel_tol, &err);
    if (!std::isfinite(val)) throw NumericalError("V1 quadrature failed");
    return 2.0 * c0 * val;
}

// mixed: fixed-start correction on the off-diagonal entries only.
enum class CovConvention { stationary, fixed_start, mixed };

// Count covariance of the (non-)stationary generalized CIR model. rates[i] is the mean level of segment i.
inline Eigen::MatrixXd gcir_count_covariance(const std::vector<double>& rates, double alpha, double kappa,
                                             double sigma, double delta,
                                             CovConvention conv = CovConvention::stationary) {
    require(kappa > 0.0, "kappa must be > 0");
    const auto k = static_cast<Eigen::Index>(rates.size());
    Eigen::MatrixXd S(k, k);
    const double s2 = sigma * sigma;
    const double kd = kappa * delta;
    const double em1 = -std::expm1(-kd);  // 1 - e^{-kappa delta}
    const double diag_shape = s2 * delta / (kappa * kappa) * (1.0 + std::expm1(-kd) / kd);
    const double off = s2 / (2.0 * kappa * kappa * kappa) * em1 * em1;
    const double c3 = s2 / (2.0 * kappa * kappa * kappa);
    std::vector<double> scale(rates.size()), decay(rates.size());
    for (std::size_t i = 0; i < rates.size(); ++i) {
        scale[i] = std::pow(rates[i], 0.5 * (alpha + 1.0));
        decay[i] = std::exp(-kd * static_cast<double>(i));  // e^{-kappa (i-1) Delta} in 1-based terms
    }
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index l = i; l < k; ++l) {
            double v;
            if (l == i) v = diag_shape;
            else v = off * std::exp(-kd * static_cast<double>(l - i - 1));
            const bool subtract = conv == CovConvention::fixed_start || (conv == CovConvention::mixed && l != i);
            if (subtract) v -= c3 * decay[i] * em1 * decay[l] * em1;
            v *= scale[i] * scale[l];
            if (l == i) v += rates[i] * delta;
            S(i, l) = v;
            S(l, i) = v;
        }
    }
    return S;
}

// Static-intensity (M3, M2 at alpha = 1) count covariance.
inline Eigen::MatrixXd static_count_covariance(const std::vector<double>& rates, double alpha, double sigma_y,
                                               double delta) {
    const auto k = static_cast<Eigen::Index>(rates.size());
    Eigen::VectorXd v(k);
    for (Eigen::Index i = 0; i < k; ++i) v(i) = std::pow(rates[static_cast<std::size_t>(i)], 0.5 * (alpha + 1.0));
    Eigen::MatrixXd S = (sigma_y * sigma_y * delta * delta) * (v * v.transpose());
    for (Eigen::Index i = 0; i < k; ++i) S(i, i) += rates[static_cast<std::size_t>(i)] * delta;
    return S;
}

struct MvnMoments {
    Eigen::VectorXd mean_vector;
    Eigen::MatrixXd covariance;
};

// Mean level of each count segment under the model's (possibly time-varying) rate.
inline std::vector<double> segment_levels(const ArrivalModelSpec& model, std::size_t k, double delta) {
    std::vector<double> out(k, model.base_lambda());
    if (model.nonstationary)
        for (std::size_t i = 0; i < k; ++i)
            out[i] = model.nonstationary->rates[model.nonstationary->segment((static_cast<double>(i) + 0.5) * delta)];
    return out;
}

inline MvnMoments mvn_moments(const ArrivalModelSpec& model, std::size_t k, double delta,
                              CovConvention conv = CovConvention::stationary) {
    model.validate();
    require(k >= 1, "k must be >= 1");
    require(delta > 0.0, "delta must be > 0");
    const auto rates = segment_levels(model, k, delta);
    MvnMoments out;
    out.mean_vector.resize(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) out.mean_vector(static_cast<Eigen::Index>(i)) = rates[i] * delta;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ModelM1>) {
                out.covariance = out.mean_vector.asDiagonal();
            } else if constexpr (std::is_same_v<T, ModelM2>) {
                out.covariance = static_count_covariance(rates, 1.0, m.sigma_g, delta);
            } else if constexpr (std::is_same_v<T, ModelM3>) {
                out.covariance = static_count_covariance(rates, m.alpha, m.sigma_y, delta);
            } else if constexpr (std::is_same_v<T, ModelM4>) {
                require(m.kappa > 0.0, "kappa must be > 0");
                out.covariance = gcir_count_covariance(rates, 0.0, m.kappa, m.sigma, delta, conv);
            } else {
                require(m.params.kappa > 0.0, "kappa must be > 0");
                out.covariance = gcir_count_covariance(rates, m.params.alpha, m.params.kappa, m.params.sigma, delta, conv);
            }
        },
        model.variant);
    return out;
}

struct TaylorFit {
    double alpha_hat = 0.0;
    double intercept_c = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
};

// OLS of log variance on log mean.
inline TaylorFit taylor_regression(const std::vector<double>& means, const std::vector<double>& variances) {
    require(means.size() == variances.size(), "means and variances differ in length");
    require(means.size() >= 2, "taylor regression needs at least 2 points");
    const auto n = static_cast<double>(means.size());
    double sx = 0, sy = 0;
    std::vector<double> x(means.size()), y(means.size());
    for (std::size_t i = 0; i < means.size(); ++i) {
        require(means[i] > 0.0 && variances[i] > 0.0, "taylor regression needs positive means and variances");
        x[i] = std::log(means[i]);
        y[i] = std::log(variances[i]);
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0.0, "taylor regression needs distinct means");
    const double slope = sxy / sxx;
    TaylorFit out;
    out.alpha_hat = slope - 1.0;
    out.intercept_c = my - slope * mx;
    out.points = means.size();
    if (syy == 0.0) {
        out.r_squared = 1.0;
    } else {
        double ssr = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - (out.intercept_c + slope * x[i]);
            ssr += r * r;
        }
        out.r_squared = std::clamp(1.0 - ssr / syy, 0.0, 1.0);
    }
    return out;
}

inline TaylorFit taylor_regression(const CountMatrix& data) {
    return taylor_regression(data.column_means(), data.column_variances());
}

}  // namespace taylorstaff
