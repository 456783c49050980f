#pragma once

// Generalized CIR intensity dX = kappa (lambda - X) dt + sigma sqrt(lambda^alpha X) dB.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "taylorstaff/errors.hpp"
#include "taylorstaff/rng.hpp"

namespace taylorstaff {

struct InitStationary {};
struct InitAtLambda {};
struct InitFixed {
    double x = 0.0;
};
using InitSpec = std::variant<InitStationary, InitAtLambda, InitFixed>;

struct GcirParams {
    double lambda = 1.0;
    double kappa = 0.0;
    double sigma = 0.0;
    double alpha = 0.0;
    InitSpec init = InitStationary{};
};

struct GammaLaw {
    double shape = 1.0;
    double rate = 1.0;

    [[nodiscard]] double mean() const { return shape / rate; }
    [[nodiscard]] double variance() const { return shape / (rate * rate); }
};

struct IntensityPath {
    std::vector<double> grid;
    std::vector<double> values;
    std::vector<double> cum_integral;

    [[nodiscard]] double horizon() const { return grid.empty() ? 0.0 : grid.back(); }
};

inline bool feller_check(const GcirParams& p) {
    if (p.sigma == 0.0) return true;
    return 2.0 * p.kappa * std::pow(p.lambda, 1.0 - p.alpha) >= p.sigma * p.sigma;
}

inline void validate_basic(const GcirParams& p) {
    require(std::isfinite(p.lambda) && p.lambda > 0.0, "lambda must be > 0");
    require(std::isfinite(p.kappa) && p.kappa >= 0.0, "kappa must be >= 0");
    require(std::isfinite(p.sigma) && p.sigma >= 0.0, "sigma must be >= 0");
    require(p.alpha >= 0.0 && p.alpha <= 1.0, "alpha must lie in [0, 1]");
    if (const auto* f = std::get_if<InitFixed>(&p.init)) require(f->x > 0.0, "initial intensity must be > 0");
}

// Full check for the dynamic model: alpha < 1 and the Feller condition.
inline void validate_dynamic(const GcirParams& p) {
    validate_basic(p);
    require(p.alpha < 1.0, "the dynamic intensity model requires alpha < 1");
    require(feller_check(p), "Feller condition 2 kappa lambda^(1-alpha) >= sigma^2 violated");
}

inline GammaLaw stationary_law(const GcirParams& p) {
    validate_dynamic(p);
    if (p.sigma == 0.0 || p.kappa == 0.0)
        throw DegenerateLaw("stationary law is a point mass at lambda when sigma = 0 or kappa = 0");
    const double s2 = p.sigma * p.sigma;
    return {2.0 * p.kappa * std::pow(p.lambda, 1.0 - p.alpha) / s2,
            2.0 * p.kappa / (s2 * std::pow(p.lambda, p.alpha))};
}

inline std::pair<double, double> conditional_mean_var(const GcirParams& p, double x0, double t) {
    require(t >= 0.0, "t must be >= 0");
    if (p.kappa == 0.0) return {x0, p.sigma == 0.0 ? 0.0 : std::numeric_limits<double>::infinity()};
    const double e = std::exp(-p.kappa * t);
    const double mean = x0 * e + p.lambda * (1.0 - e);
    const double s2la = p.sigma * p.sigma * std::pow(p.lambda, p.alpha);
    const double var = x0 * (s2la / p.kappa) * (e - e * e) +
                       (s2la * p.lambda / (2.0 * p.kappa)) * (1.0 - e) * (1.0 - e);
    return {mean, var};
}

// Scaled noncentral chi-square c * chi2_d(nc) via the Poisson mixture of Gammas.
inline double sample_scaled_ncx2(double d, double c, double nc, Engine& eng) {
    double shape = 0.5 * d;
    if (nc > 0.0) shape += static_cast<double>(std::poisson_distribution<long long>(0.5 * nc)(eng));
    return c * 2.0 * std::gamma_distribution<double>(shape, 1.0)(eng);
}

inline double draw_initial(const GcirParams& p, double lambda0, Engine& eng) {
    if (const auto* f = std::get_if<InitFixed>(&p.init)) return f->x;
    if (std::holds_alternative<InitAtLambda>(p.init) || p.sigma == 0.0 || p.kappa == 0.0) return lambda0;
    const double s2 = p.sigma * p.sigma;
    const double shape = 2.0 * p.kappa * std::pow(lambda0, 1.0 - p.alpha) / s2;
    const double rate = 2.0 * p.kappa / (s2 * std::pow(lambda0, p.alpha));
    return std::gamma_distribution<double>(shape, 1.0 / rate)(eng);
}

inline double default_step(double delta) { return std::max(delta / 100.0, 1e-3); }

namespace detail {

// Exact transition over one step of length h with mean level lam.
inline double gcir_step(const GcirParams& p, double lam, double x, double h, Engine& eng) {
    if (p.kappa == 0.0) return x;
    const double decay = std::exp(-p.kappa * h);
    if (p.sigma == 0.0) return lam + (x - lam) * decay;
    const double s2 = p.sigma * p.sigma;
    const double d = 4.0 * p.kappa * std::pow(lam, 1.0 - p.alpha) / s2;
    const double c = s2 * std::pow(lam, p.alpha) * (1.0 - decay) / (4.0 * p.kappa);
    const double next = sample_scaled_ncx2(d, c, x * decay / c, eng);
    return next > 0.0 ? next : std::numeric_limits<double>::min();
}

// Path under a periodic piecewise-constant mean level. rates.size() == 1 gives the stationary model.
inline IntensityPath simulate_piecewise(const GcirParams& p, const std::vector<double>& rates, double seg_len,
                                        double horizon, double step, Engine& eng) {
    require(horizon > 0.0, "horizon must be > 0");
    require(step > 0.0, "step must be > 0");
    require(step <= horizon, "step must not exceed the horizon");
    require(!rates.empty(), "rate vector must not be empty");
    const bool piecewise = rates.size() > 1;
    double h = step;
    if (piecewise) {
        require(seg_len > 0.0, "segment length must be > 0");
        const double per_seg = std::ceil(seg_len / step - 1e-9);
        h = seg_len / per_seg;
    }
    const auto n = static_cast<std::size_t>(std::ceil(horizon / h - 1e-9));
    const std::size_t k = rates.size();

    IntensityPath path;
    path.grid.resize(n + 1);
    path.values.resize(n + 1);
    path.cum_integral.resize(n + 1);
    path.grid[0] = 0.0;
    path.values[0] = draw_initial(p, rates[0], eng);
    path.cum_integral[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t0 = path.grid[i];
        const double t1 = (i + 1 == n) ? horizon : std::min(static_cast<double>(i + 1) * h, horizon);
        double lam = rates[0];
        if (piecewise) {
            const auto seg = static_cast<std::size_t>(std::floor(0.5 * (t0 + t1) / seg_len));
            lam = rates[seg % k];
        }
        const double x1 = gcir_step(p, lam, path.values[i], t1 - t0, eng);
        path.grid[i + 1] = t1;
        path.values[i + 1] = x1;
        path.cum_integral[i + 1] = path.cum_integral[i] + 0.5 * (path.values[i] + x1) * (t1 - t0);
    }
    return path;
}

}  // namespace detail

inline IntensityPath simulate_path(const GcirParams& p, double horizon, double step, Engine& eng) {
    validate_dynamic(p);
    return detail::simulate_piecewise(p, {p.lambda}, horizon, horizon, step, eng);
}

inline IntensityPath simulate_path(const GcirParams& p, double horizon, double step, std::uint64_t seed) {
    Engine eng = make_engine(seed);
    return simulate_path(p, horizon, step, eng);
}

}  // namespace taylorstaff
