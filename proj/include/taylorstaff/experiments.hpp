#pragma once

// Experiment pipelines shared by the CLI and the acceptance harness: the small-to-large staffing table,
// stationary delay experiments, and the ADL robustness run.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "taylorstaff/arrivals.hpp"
#include "taylorstaff/estimation.hpp"
#include "taylorstaff/queue_sim.hpp"
#include "taylorstaff/rng.hpp"
#include "taylorstaff/service.hpp"
#include "taylorstaff/staffing.hpp"

namespace taylorstaff {

inline ServiceDistSpec reference_service() { return ServiceDistSpec::lognormal(1.0 / 6.0, 1.0 / 6.0); }
inline GcirParams reference_params(double lambda) { return {lambda, 0.1, 0.5, 0.5}; }

inline const std::vector<ModelTag>& all_models() {
    static const std::vector<ModelTag> tags{ModelTag::m1, ModelTag::m2, ModelTag::m3, ModelTag::m4, ModelTag::m5};
    return tags;
}

inline std::vector<FitResult> fit_models(const CountMatrix& data, const std::vector<ModelTag>& models,
                                         const FitOptions& opt = {}) {
    std::vector<FitResult> out;
    for (auto t : models) out.push_back(fit_mle(data, t, opt));
    return out;
}

struct StaffingRow {
    std::string model;
    std::string rule;
    double lambda = 0.0;
    double epsilon = 0.0;
    int n = 0;
    std::optional<double> delta_star;
};

struct StaffingTable {
    std::vector<StaffingRow> rows;
    std::vector<RefinedResult> refined;  // one per target

    [[nodiscard]] int level(const std::string& model, const std::string& rule, double lambda, double eps) const {
        for (const auto& r : rows)
            if (r.model == model && r.rule == rule && r.lambda == lambda && std::abs(r.epsilon - eps) < 1e-12) return r.n;
        throw ValidationError("no staffing row for " + model + "/" + rule);
    }
};

// Rules of the fitted M1..M4 at each lambda, plus basic (and optionally refined) alpha rules at the true M5 parameters.
inline StaffingTable staffing_table(const std::vector<FitResult>& fits, const GcirParams& truth,
                                    const ServiceDistSpec& service, const std::vector<double>& lambdas,
                                    const std::vector<QosTarget>& targets, const std::optional<RefinedTuning>& tuning,
                                    std::uint64_t seed, const V1Options& v1opt = {}) {
    StaffingTable out;
    for (const auto& target : targets) {
        std::optional<RefinedResult> refined;
        if (tuning) {
            GcirParams p = truth;
            p.lambda = lambdas.front();
            refined = refined_alpha_rule(p, service, target, *tuning, seed, v1opt);
            out.refined.push_back(*refined);
        }
        for (double lam : lambdas) {
            for (const auto& f : fits) {
                if (f.model == ModelTag::m5) continue;
                auto d = model_rule(fitted_model(f, lam), lam, service, target, v1opt);
                out.rows.push_back({to_string(f.model), d.rule, lam, target.epsilon, d.n, std::nullopt});
            }
            GcirParams p = truth;
            p.lambda = lam;
            auto b = basic_alpha_rule(p, service, target, v1opt);
            out.rows.push_back({"m5", b.rule, lam, target.epsilon, b.n, std::nullopt});
            if (refined) {
                auto r = alpha_rule_with_coefficient(lam, truth.alpha, refined->delta_star, service.mu(), target);
                out.rows.push_back({"m5", r.rule, lam, target.epsilon, r.n, r.delta_star});
            }
        }
    }
    return out;
}

struct DelayRun {
    int n = 0;
    bool infinite = false;
    DelayEstimate curve;
    double delayed_fraction = 0.0;  // mean over replications of the per-arrival delayed flags
    [[nodiscard]] double average() const { return curve.average(); }
};

// Replicated stationary experiment: P(Q(t) > n) on probes in [warmup, horizon].
inline DelayRun stationary_delay(const ArrivalModelSpec& spec, const ServiceDistSpec& service, int n, bool infinite,
                                 std::size_t reps, double horizon, double warmup, std::uint64_t seed,
                                 unsigned threads = 1, double probe_step = 0.1) {
    require(horizon >= warmup, "horizon shorter than the warm-up");
    const auto capacity = infinite ? Capacity::infinite_servers() : Capacity::servers(n);
    auto rq = replicate_queue([&](std::size_t r) { return generate(spec, horizon, derive_seed(seed, stream::arrivals, r)); },
                              service, capacity, probe_grid(warmup, horizon, probe_step), reps, seed, threads);
    DelayRun out;
    out.n = n;
    out.infinite = infinite;
    out.curve = rq.exceedance(constant_threshold(n));
    for (double f : rq.delayed_fraction) out.delayed_fraction += f;
    out.delayed_fraction /= static_cast<double>(std::max<std::size_t>(1, reps));
    return out;
}

// Synthetic stand-in for a fitted ADL day: 25 half-hour segments, two demand peaks, about 6000 calls per day.
// The total has coefficient of variation 0.1 and the Dirichlet concentrations sum to 3000.
inline AdlSpec synthetic_adl_spec() {
    AdlSpec s;
    s.delta = 0.5;
    s.total_shape = 100.0;
    s.total_rate = 100.0 / 6000.0;
    const std::size_t k = 25;
    std::vector<double> w(k);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double x = static_cast<double>(i);
        w[i] = 0.6 + std::exp(-std::pow((x - 7.0) / 4.0, 2)) + 0.8 * std::exp(-std::pow((x - 17.0) / 4.0, 2));
        sum += w[i];
    }
    s.dirichlet.resize(k);
    for (std::size_t i = 0; i < k; ++i) s.dirichlet[i] = 3000.0 * w[i] / sum;
    return s;
}

struct AdlRule {
    std::string label;
    StaffingProfile profile;
    DelayEstimate curve;
};

struct AdlExperiment {
    CountMatrix training;
    std::vector<FitResult> fits;
    RefinedResult refined;
    std::vector<AdlRule> rules;

    [[nodiscard]] const AdlRule& rule(const std::string& label) const {
        for (const auto& r : rules)
            if (r.label == label) return r;
        throw ValidationError("no ADL rule '" + label + "'");
    }
};

// Per-segment rates fixed at the segment means, remaining parameters by likelihood; profiles from each
// model's rule; delay curves from fresh ADL replications started empty.
inline AdlExperiment adl_experiment(const AdlSpec& spec, const ServiceDistSpec& service, const QosTarget& target,
                                    std::size_t m_train, std::size_t m_eval, const RefinedTuning& tuning,
                                    std::uint64_t seed, unsigned threads = 1, double probe_step = 0.1) {
    AdlExperiment out{CountMatrix(1, 1, 1.0), {}, {}, {}};
    out.training = generate_adl(spec, m_train, derive_seed(seed, stream::datasets, 0), threads).counts;
    SippVariant sipp;
    FitOptions fo;
    fo.seed = seed;
    for (auto t : all_models()) out.fits.push_back(two_step_fit(out.training, t, sipp, fo));
    const auto& rates = out.fits.front().rates;

    for (const auto& f : out.fits) {
        auto prof = staffing_profile(rates, spec.delta, [&](double lam) {
            return model_rule(fitted_model(f, lam), lam, service, target);
        });
        out.rules.push_back({f.model == ModelTag::m5 ? "m5-basic" : to_string(f.model), prof, {}});
    }
    const auto& m5 = out.fits.back();
    GcirParams p{*std::min_element(rates.begin(), rates.end()), m5.param("kappa"), m5.param("sigma"), m5.param("alpha")};
    out.refined = refined_alpha_rule(p, service, target, tuning, derive_seed(seed, stream::restarts, 99));
    auto prof = staffing_profile(rates, spec.delta, [&](double lam) {
        return alpha_rule_with_coefficient(lam, p.alpha, out.refined.delta_star, service.mu(), target);
    });
    out.rules.push_back({"m5-refined", prof, {}});

    auto eval = generate_adl(spec, m_eval, derive_seed(seed, stream::datasets, 1), threads);
    const auto probes = probe_grid(0.0, spec.period() - probe_step, probe_step);
    for (auto& r : out.rules) {
        r.profile.period = spec.period();
        auto rq = replicate_queue([&](std::size_t j) { return eval.paths[j]; }, service, Capacity::varying(r.profile),
                                  probes, m_eval, derive_seed(seed, stream::service, 7), threads);
        r.curve = rq.exceedance(profile_threshold(r.profile));
    }
    return out;
}

}  // namespace taylorstaff
