#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "taylorstaff/analytics.hpp"
#include "taylorstaff/arrivals.hpp"
#include "taylorstaff/errors.hpp"
#include "taylorstaff/intensity.hpp"
#include "taylorstaff/queue_sim.hpp"
#include "taylorstaff/service.hpp"

namespace taylorstaff {

struct QosTarget {
    double epsilon = 0.05;
    double beta = 0.0;

    static QosTarget from_epsilon(double eps) {
        require(eps > 0.0 && eps < 1.0, "epsilon must lie in (0, 1)");
        return {eps, boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - eps)};
    }
    // Explicit beta; used for the beta = 0 reduction.
    static QosTarget from_beta(double eps, double beta) { return {eps, beta}; }
};

struct StaffingDecision {
    std::string rule;
    double lambda = 0.0;
    double epsilon = 0.0;
    double base = 0.0;
    double safety = 0.0;
    int n = 1;
    std::optional<double> delta_star;
};

inline int staffing_ceil(double x) {
    const double c = std::ceil(x - 1e-9 * std::max(1.0, std::abs(x)));
    return std::max(1, static_cast<int>(c));
}

inline StaffingDecision make_decision(std::string rule, double lambda, const QosTarget& target, double base,
                                      double safety) {
    StaffingDecision d;
    d.rule = std::move(rule);
    d.lambda = lambda;
    d.epsilon = target.epsilon;
    d.base = base;
    d.safety = std::max(0.0, safety);
    d.n = staffing_ceil(d.base + d.safety);
    return d;
}

inline StaffingDecision sqrt_rule(double lambda, double mu, const QosTarget& target) {
    require(lambda > 0.0 && mu > 0.0, "lambda and mu must be > 0");
    const double r = lambda / mu;
    return make_decision("sqrt", lambda, target, r, target.beta * std::sqrt(r));
}

inline StaffingDecision sqrt_cir_rule(double lambda, double kappa, double sigma, const ServiceDistSpec& service,
                                      const QosTarget& target, const V1Options& opt = {}) {
    require(lambda > 0.0, "lambda must be > 0");
    require(feller_check({lambda, kappa, sigma, 0.0}), "Feller condition violated at alpha = 0");
    const double mu = service.mu();
    const double v = sigma == 0.0 ? 0.0 : v1(service, kappa, sigma, std::numeric_limits<double>::infinity(), opt);
    return make_decision("sqrt-cir", lambda, target, lambda / mu, target.beta * std::sqrt(lambda) * std::sqrt(v + 1.0 / mu));
}

inline StaffingDecision linear_rule(double lambda, double mu, double sigma_g, const QosTarget& target) {
    require(lambda > 0.0 && mu > 0.0, "lambda and mu must be > 0");
    require(sigma_g >= 0.0, "sigma_g must be >= 0");
    return make_decision("linear", lambda, target, lambda / mu, target.beta * lambda * sigma_g / mu);
}

inline StaffingDecision alpha_static_rule(double lambda, double alpha, double sigma_y, double mu,
                                          const QosTarget& target) {
    require(lambda > 0.0 && mu > 0.0, "lambda and mu must be > 0");
    require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
    require(sigma_y >= 0.0, "sigma_y must be >= 0");
    const double v = sigma_y * sigma_y / (mu * mu) + (alpha == 0.0 ? 1.0 / mu : 0.0);
    return make_decision("alpha-static", lambda, target, lambda / mu,
                         target.beta * std::pow(lambda, 0.5 * (alpha + 1.0)) * std::sqrt(v));
}

// delta_0 = beta sqrt(V1(inf) + 1{alpha = 0} / mu).
inline double basic_alpha_coefficient(const GcirParams& p, const ServiceDistSpec& service, const QosTarget& target,
                                      const V1Options& opt = {}) {
    const double mu = service.mu();
    const double v = (p.sigma == 0.0 || p.kappa == 0.0)
                         ? 0.0
                         : v1(service, p.kappa, p.sigma, std::numeric_limits<double>::infinity(), opt);
    return target.beta * std::sqrt(v + (p.alpha == 0.0 ? 1.0 / mu : 0.0));
}

inline StaffingDecision basic_alpha_rule(const GcirParams& p, const ServiceDistSpec& service, const QosTarget& target,
                                         const V1Options& opt = {}) {
    validate_dynamic(p);
    service.validate();
    const double delta0 = basic_alpha_coefficient(p, service, target, opt);
    return make_decision("basic-alpha", p.lambda, target, p.lambda / service.mu(),
                         delta0 * std::pow(p.lambda, 0.5 * (p.alpha + 1.0)));
}

// n = lambda/mu + delta lambda^((alpha+1)/2) at a given coefficient.
inline StaffingDecision alpha_rule_with_coefficient(double lambda, double alpha, double delta, double mu,
                                                    const QosTarget& target, std::string rule = "refined-alpha") {
    auto d = make_decision(std::move(rule), lambda, target, lambda / mu, delta * std::pow(lambda, 0.5 * (alpha + 1.0)));
    d.delta_star = delta;
    return d;
}

struct RefinedTuning {
    double lambda_sim = 100.0;
    double t_sim = 24.0;
    std::size_t m = 100;
    // step size a_i = b / (i + c)^d
    double step_b = 20.0;
    double step_c = 20.0;
    double step_d = 1.0;
    double tolerance = 0.01;
    std::size_t max_iter = 200;
    bool common_random_numbers = true;
    // > 0 averages the indicator over probes every 0.1 in [t_sim - window, t_sim] (variance-reduction variant)
    double window = 0.0;
    double intensity_step = 0.01;
    unsigned threads = 0;

    void validate() const {
        require(lambda_sim > 0.0 && t_sim > 0.0 && m >= 1, "tuning values must be positive");
        require(step_b > 0.0 && step_c > 0.0 && step_d > 0.5 && step_d <= 1.0, "invalid step-size schedule");
        require(tolerance > 0.0 && max_iter >= 1, "invalid stopping rule");
        require(window >= 0.0 && window < t_sim, "window must lie in [0, t_sim)");
    }
};

struct RefinedStep {
    std::size_t iteration = 0;
    double delta = 0.0;
    double n_real = 0.0;
    int servers = 0;
    double m_value = 0.0;
    double step = 0.0;
};

struct RefinedResult {
    StaffingDecision decision;
    double delta0 = 0.0;
    double delta_star = 0.0;
    bool converged = false;
    std::string status;
    std::vector<RefinedStep> trace;
};

// Estimator M(delta): fraction of replications with Q(t_sim) > n_real, simulated with ceil(n_real) servers.
class RefinedEstimator {
public:
    RefinedEstimator(const GcirParams& p, const ServiceDistSpec& service, const RefinedTuning& tuning, std::uint64_t seed)
        : p_(p), service_(service), tuning_(tuning), seed_(seed) {
        p_.lambda = tuning.lambda_sim;
        p_.init = InitStationary{};
        validate_dynamic(p_);
        if (tuning_.window > 0.0) probes_ = probe_grid(tuning_.t_sim - tuning_.window, tuning_.t_sim, 0.1);
        if (probes_.empty() || probes_.back() < tuning_.t_sim - 1e-9) probes_.push_back(tuning_.t_sim);
        if (tuning_.common_random_numbers) cached_ = make_paths(0);
    }

    [[nodiscard]] double level(double delta) const {
        return p_.lambda / service_.mu() + delta * std::pow(p_.lambda, 0.5 * (p_.alpha + 1.0));
    }

    double operator()(double n_real, std::size_t iteration) {
        const int servers = std::max(1, static_cast<int>(std::ceil(n_real)));
        std::vector<ArrivalPath> fresh;
        if (!tuning_.common_random_numbers) fresh = make_paths(iteration + 1);
        const auto& paths = tuning_.common_random_numbers ? cached_ : fresh;
        const std::uint64_t sseed = tuning_.common_random_numbers ? seed_ : derive_seed(seed_, 77, iteration + 1);
        auto rq = replicate_queue([&](std::size_t r) { return paths[r]; }, service_, Capacity::servers(servers), probes_,
                                  tuning_.m, sseed, tuning_.threads);
        return rq.exceedance(constant_threshold(n_real)).average();
    }

private:
    std::vector<ArrivalPath> make_paths(std::size_t batch) const {
        std::vector<ArrivalPath> out(tuning_.m);
        const auto spec = ArrivalModelSpec::m5(p_);
        GenerateOptions opt;
        opt.step = tuning_.intensity_step;
        parallel_for(tuning_.m, tuning_.threads, [&](std::size_t j) {
            out[j] = generate(spec, tuning_.t_sim, derive_seed(seed_, stream::arrivals + 100 * batch, j), opt);
        });
        return out;
    }

    GcirParams p_;
    ServiceDistSpec service_;
    RefinedTuning tuning_;
    std::uint64_t seed_;
    std::vector<double> probes_;
    std::vector<ArrivalPath> cached_;
};

// Stochastic approximation for the root of M(delta) = eps, deployed at p.lambda.
// M decreases in delta, so the update is delta_{i+1} = delta_i + a_i (M(delta_i) - eps).
inline RefinedResult refined_alpha_rule(const GcirParams& p, const ServiceDistSpec& service, const QosTarget& target,
                                        const RefinedTuning& tuning, std::uint64_t seed, const V1Options& opt = {}) {
    validate_dynamic(p);
    service.validate();
    tuning.validate();
    RefinedResult out;
    out.delta0 = basic_alpha_coefficient(p, service, target, opt);
    const double upper = 10.0 * std::max(out.delta0, 1.0);
    RefinedEstimator estimate(p, service, tuning, seed);

    double delta = out.delta0;
    out.status = "iteration cap reached";
    for (std::size_t i = 0; i < tuning.max_iter; ++i) {
        RefinedStep s;
        s.iteration = i;
        s.delta = delta;
        s.n_real = estimate.level(delta);
        s.servers = std::max(1, static_cast<int>(std::ceil(s.n_real)));
        s.m_value = estimate(s.n_real, i);
        s.step = tuning.step_b / std::pow(static_cast<double>(i) + tuning.step_c, tuning.step_d);
        out.trace.push_back(s);
        if (std::abs(s.m_value - target.epsilon) <= tuning.tolerance + 1e-12) {
            out.converged = true;
            out.status = "converged";
            break;
        }
        delta += s.step * (s.m_value - target.epsilon);
        if (delta < 0.0 || delta > upper) {
            out.status = "diverged";
            break;
        }
    }
    out.delta_star = out.trace.back().delta;
    out.decision = alpha_rule_with_coefficient(p.lambda, p.alpha, out.delta_star, service.mu(), target);
    return out;
}

// Each arrival model's own analytic rule: M1 sqrt, M2 linear, M3 alpha-static, M4 sqrt-cir, M5 basic-alpha.
inline StaffingDecision model_rule(const ArrivalModelSpec& model, double lambda, const ServiceDistSpec& service,
                                   const QosTarget& target, const V1Options& opt = {}) {
    const double mu = service.mu();
    return std::visit(
        [&](const auto& m) -> StaffingDecision {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ModelM1>) return sqrt_rule(lambda, mu, target);
            else if constexpr (std::is_same_v<T, ModelM2>) return linear_rule(lambda, mu, m.sigma_g, target);
            else if constexpr (std::is_same_v<T, ModelM3>) return alpha_static_rule(lambda, m.alpha, m.sigma_y, mu, target);
            else if constexpr (std::is_same_v<T, ModelM4>) return sqrt_cir_rule(lambda, m.kappa, m.sigma, service, target, opt);
            else {
                GcirParams p = m.params;
                p.lambda = lambda;
                return basic_alpha_rule(p, service, target, opt);
            }
        },
        model.variant);
}

// Per-segment staffing profile from segment rates and a rule evaluated at each rate.
template <class Rule>
StaffingProfile staffing_profile(const std::vector<double>& rates, double delta, Rule&& rule) {
    StaffingProfile p;
    p.starts.clear();
    p.levels.clear();
    for (std::size_t i = 0; i < rates.size(); ++i) {
        p.starts.push_back(delta * static_cast<double>(i));
        p.levels.push_back(rule(rates[i]).n);
    }
    p.period = delta * static_cast<double>(rates.size());
    return p;
}

}  // namespace taylorstaff
