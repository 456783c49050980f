#include "cli_app.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "taylorstaff/taylorstaff.hpp"

namespace taylorstaff::cli {
namespace {

namespace fs = std::filesystem;

struct IoFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::string out = ".";
};

struct ServiceOpts {
    std::string family = "exp";
    double mu = 6.0;
    double sd = 0.0;  // 0 means sd = mean

    [[nodiscard]] ServiceDistSpec spec() const {
        require(mu > 0.0, "mu must be > 0");
        require(sd >= 0.0, "service-sd must be >= 0");
        const auto f = parse_service_family(family);
        const double mean = 1.0 / mu;
        const double s = sd > 0.0 ? sd : mean;
        ServiceDistSpec out = f == ServiceFamily::exponential ? ServiceDistSpec::exponential(mu)
                              : f == ServiceFamily::lognormal ? ServiceDistSpec::lognormal(mean, s)
                                                              : ServiceDistSpec::gamma(mean, s);
        out.validate();
        return out;
    }
};

struct ModelOpts {
    std::string model;
    double lambda = 0.0;
    double alpha = 0.5;
    double kappa = 0.1;
    double sigma = 0.5;
    double sigma_g = 0.0;
    double sigma_y = 0.0;
    std::string init = "stationary";
    double x0 = 0.0;
    std::vector<double> rates;
    double segment = 0.0;

    [[nodiscard]] InitSpec init_spec() const {
        if (init == "stationary") return InitStationary{};
        if (init == "lambda") return InitAtLambda{};
        if (init == "fixed") return InitFixed{x0};
        throw ValidationError("unknown init '" + init + "' (expected stationary, lambda or fixed)");
    }

    [[nodiscard]] ArrivalModelSpec spec() const {
        const double lam = rates.empty() ? lambda : rates.front();
        ArrivalModelSpec s;
        switch (parse_model_tag(model)) {
            case ModelTag::m1: s = ArrivalModelSpec::m1(lam); break;
            case ModelTag::m2: s = ArrivalModelSpec::m2(lam, sigma_g); break;
            case ModelTag::m3: s = ArrivalModelSpec::m3(lam, alpha, sigma_y); break;
            case ModelTag::m4: s = ArrivalModelSpec::m4(lam, kappa, sigma, init_spec()); break;
            case ModelTag::m5: s = ArrivalModelSpec::m5({lam, kappa, sigma, alpha, init_spec()}); break;
        }
        if (!rates.empty()) {
            require(segment > 0.0, "--segment is required with --rates");
            s.nonstationary = RateProfile{segment, rates};
        }
        s.validate();
        return s;
    }
};

struct TargetOpts {
    std::vector<double> eps{0.05};
    std::optional<double> beta;

    [[nodiscard]] std::vector<QosTarget> targets() const {
        require(!eps.empty(), "at least one --eps value is needed");
        require(!beta || eps.size() == 1, "--beta applies to a single --eps value");
        std::vector<QosTarget> out;
        for (double e : eps) out.push_back(beta ? QosTarget::from_beta(e, *beta) : QosTarget::from_epsilon(e));
        for (const auto& t : out) require(t.epsilon > 0.0 && t.epsilon < 1.0, "eps must lie in (0, 1)");
        return out;
    }
};

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoFailure("cannot write " + p.string());
    return f;
}

std::ifstream open_in(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw IoFailure("cannot read " + p);
    return f;
}

fs::path out_dir(const Common& c) {
    fs::path d(c.out);
    std::error_code ec;
    fs::create_directories(d, ec);
    if (ec) throw IoFailure("cannot create output directory " + c.out);
    return d;
}

std::string numbered(const char* stem, std::size_t i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%04zu.csv", stem, i);
    return buf;
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", "flat key = value configuration file; command-line flags take precedence");
    sub->add_option("--seed", c.seed, "random seed (default: TAYLOR_STAFF_SEED or 1)");
    sub->add_option("--threads", c.threads, "worker threads, 0 = all cores");
    sub->add_option("--out", c.out, "output directory");
}

void add_service(CLI::App* sub, ServiceOpts& s) {
    sub->add_option("--service", s.family, "service law: exp, lognormal or gamma");
    sub->add_option("--mu", s.mu, "service rate (mean service time 1/mu)");
    sub->add_option("--service-sd", s.sd, "service-time standard deviation (default: the mean)");
}

void add_model_params(CLI::App* sub, ModelOpts& m) {
    sub->add_option("--alpha", m.alpha, "dispersion scaling alpha");
    sub->add_option("--kappa", m.kappa, "mean-reversion speed");
    sub->add_option("--sigma", m.sigma, "intensity volatility");
    sub->add_option("--sigma-g", m.sigma_g, "M2 mixing standard deviation");
    sub->add_option("--sigma-y", m.sigma_y, "M3 mixing standard deviation");
}

// ---- simulate ----

struct SimulateOpts {
    Common common;
    ModelOpts model;
    ServiceOpts service;
    TargetOpts target;
    double horizon = 0.0;
    std::size_t reps = 1;
    int servers = 0;
    std::optional<double> threshold;
    double warmup = 24.0;
    double probe_step = 0.1;
    double delta = 0.0;
    bool queue_paths = false;
    double step = 0.01;
};

int cmd_simulate(const SimulateOpts& o, std::ostream& out) {
    require(o.reps >= 1, "reps must be >= 1");
    require(o.servers >= 0, "servers must be >= 0");
    require(o.probe_step > 0.0, "probe-step must be > 0");
    require(o.step > 0.0, "step must be > 0");
    const auto spec = o.model.spec();
    const auto service = o.service.spec();
    const double horizon = spec.nonstationary ? (o.horizon > 0.0 ? o.horizon : spec.nonstationary->period()) : o.horizon;
    require(horizon > 0.0, "horizon must be > 0");
    const auto dir = out_dir(o.common);
    const unsigned threads = resolve_threads(o.common.threads);
    const bool with_delay = horizon >= o.warmup;
    const bool infinite = o.servers == 0;

    double threshold = o.servers;
    if (infinite) {
        if (o.threshold) {
            threshold = *o.threshold;
        } else if (with_delay) {
            const auto d = model_rule(spec, spec.base_lambda(), service, o.target.targets().front());
            threshold = d.n;
            out << "threshold " << d.rule << " n=" << d.n << '\n';
        }
    }

    GenerateOptions gen;
    gen.step = o.step;
    const auto probes = with_delay ? probe_grid(o.warmup, horizon, o.probe_step) : std::vector<double>{};
    std::vector<std::vector<std::int32_t>> samples(o.reps);
    std::vector<std::vector<std::int64_t>> counts(o.reps);
    parallel_for(o.reps, threads, [&](std::size_t r) {
        auto path = generate(spec, horizon, derive_seed(o.common.seed, stream::arrivals, r), gen);
        {
            auto f = open_out(dir / numbered("arrivals", r));
            io::write_arrivals(f, {path}, r);
            if (!f) throw IoFailure("write failed for " + numbered("arrivals", r));
        }
        if (o.delta > 0.0) counts[r] = counts_from_timestamps(path, o.delta);
        if (with_delay || o.queue_paths) {
            const auto cap = infinite ? Capacity::infinite_servers() : Capacity::servers(o.servers);
            auto q = simulate_queue(path, service, cap, derive_seed(o.common.seed, stream::service, r));
            if (with_delay) samples[r] = q.sample(probes);
            if (o.queue_paths) {
                auto f = open_out(dir / numbered("queue", r));
                io::write_queue_path(f, q);
            }
        }
    });

    if (o.delta > 0.0) {
        CountMatrix cm(o.reps, counts.front().size(), o.delta);
        for (std::size_t r = 0; r < o.reps; ++r)
            std::copy(counts[r].begin(), counts[r].end(), cm.counts.begin() + static_cast<std::ptrdiff_t>(r * cm.k));
        auto f = open_out(dir / "counts.csv");
        io::write_counts(f, cm);
    }
    out << "wrote " << o.reps << " arrival path files";
    if (with_delay) {
        ReplicatedQueue rq;
        rq.probes = probes;
        rq.samples = std::move(samples);
        const auto d = rq.exceedance(constant_threshold(threshold));
        auto f = open_out(dir / "delay.csv");
        io::write_delay(f, d);
        out << " and delay.csv (average P(Q > " << threshold << ") = " << io::fixed(d.average(), 6) << ")";
    }
    out << '\n';
    return kOk;
}

int cmd_simulate_adl(const SimulateOpts& o, const std::vector<double>& dirichlet, double total_shape,
                     double total_rate, std::ostream& out) {
    AdlSpec spec = dirichlet.empty() ? synthetic_adl_spec() : AdlSpec{total_shape, total_rate, dirichlet, o.model.segment};
    if (!dirichlet.empty()) spec.validate();
    const auto dir = out_dir(o.common);
    auto sample = generate_adl(spec, o.reps, o.common.seed, resolve_threads(o.common.threads));
    {
        auto f = open_out(dir / "arrivals.csv");
        io::write_arrivals(f, sample.paths);
    }
    {
        auto f = open_out(dir / "counts.csv");
        io::write_counts(f, sample.counts);
    }
    out << "wrote " << o.reps << " ADL cycles of " << spec.k() << " segments (period " << spec.period()
        << ") to arrivals.csv and counts.csv\n";
    return kOk;
}

// ---- fit ----

struct FitOpts {
    Common common;
    std::string counts;
    double delta = 0.0;
    std::vector<std::string> models{"m5"};
    std::string two_step;
    std::size_t h = 1;
    double day_offset = 0.0;
    std::size_t restarts = 5;
    std::size_t max_evals = 10000;
    bool joint_lambda = false;
    std::string convention = "stationary";
};

CovConvention parse_convention(const std::string& s) {
    if (s == "stationary") return CovConvention::stationary;
    if (s == "fixed") return CovConvention::fixed_start;
    if (s == "mixed") return CovConvention::mixed;
    throw ValidationError("unknown covariance convention '" + s + "' (expected stationary, fixed or mixed)");
}

int cmd_fit(const FitOpts& o, std::ostream& out) {
    require(o.delta > 0.0, "delta must be > 0");
    auto in = open_in(o.counts);
    const auto data = io::read_counts(in, o.delta);
    data.validate();
    FitOptions fo;
    fo.seed = o.common.seed;
    fo.restarts = o.restarts;
    fo.max_evals = o.max_evals;
    fo.joint_lambda = o.joint_lambda;
    fo.convention = parse_convention(o.convention);
    std::vector<ModelTag> tags;
    for (const auto& m : o.models) tags.push_back(parse_model_tag(m));
    require(!tags.empty(), "no models to fit");

    std::optional<SippVariant> sipp;
    if (!o.two_step.empty()) {
        sipp = SippVariant{};
        sipp->kind = parse_sipp_kind(o.two_step);
        sipp->h = o.h;
        sipp->day_offset = o.day_offset;
    }

    const auto dir = out_dir(o.common);
    std::vector<FitResult> fits;
    for (auto t : tags) {
        FitResult f = sipp ? two_step_fit(data, t, *sipp, fo) : fit_mle(data, t, fo);
        auto rep = open_out(dir / ("fit_" + to_string(t) + ".txt"));
        io::write_fit_report(rep, f);
        fits.push_back(std::move(f));
    }
    {
        auto f = open_out(dir / "fits.csv");
        f << io::fit_header() << '\n';
        for (const auto& r : fits) f << io::fit_row(r) << '\n';
    }
    for (const auto& f : fits) {
        out << to_string(f.model) << ": log_likelihood=" << io::fixed(f.log_likelihood, 6);
        for (const auto& [k, v] : f.params) out << ' ' << k << '=' << io::fixed(v, 6);
        out << '\n';
    }
    if (fits.size() >= 2) {
        const auto rk = select_model(fits);
        auto f = open_out(dir / "ranking.csv");
        f << "model,aic,bic,delta_aic,delta_bic,rank_aic,rank_bic\n";
        out << "model  delta_aic  delta_bic  rank_aic  rank_bic\n";
        for (const auto& e : rk.entries) {
            f << to_string(e.model) << ',' << io::general(e.aic) << ',' << io::general(e.bic) << ','
              << io::general(e.delta_aic) << ',' << io::general(e.delta_bic) << ',' << e.rank_aic << ',' << e.rank_bic
              << '\n';
            out << to_string(e.model) << "  " << io::fixed(e.delta_aic, 2) << "  " << io::fixed(e.delta_bic, 2) << "  "
                << e.rank_aic << "  " << e.rank_bic << '\n';
        }
    }
    return kOk;
}

// ---- staff ----

struct StaffOpts {
    Common common;
    std::string rule;
    std::vector<double> lambdas;
    ModelOpts model;
    ServiceOpts service;
    TargetOpts target;
    RefinedTuning tuning;
    std::string trace;
};

StaffingDecision analytic_decision(const StaffOpts& o, const std::string& rule, double lam,
                                   const ServiceDistSpec& service, const QosTarget& t) {
    const double mu = service.mu();
    if (rule == "sqrt") return sqrt_rule(lam, mu, t);
    if (rule == "sqrt-cir") return sqrt_cir_rule(lam, o.model.kappa, o.model.sigma, service, t);
    if (rule == "linear") return linear_rule(lam, mu, o.model.sigma_g, t);
    if (rule == "alpha-static") return alpha_static_rule(lam, o.model.alpha, o.model.sigma_y, mu, t);
    if (rule == "basic-alpha") return basic_alpha_rule({lam, o.model.kappa, o.model.sigma, o.model.alpha}, service, t);
    throw ValidationError("unknown rule '" + rule + "'");
}

int cmd_staff(const StaffOpts& o, std::ostream& out) {
    static const std::vector<std::string> rules{"sqrt", "sqrt-cir", "linear", "alpha-static", "basic-alpha", "refined"};
    require(std::find(rules.begin(), rules.end(), o.rule) != rules.end(),
            "unknown rule '" + o.rule + "' (expected sqrt, sqrt-cir, linear, alpha-static, basic-alpha or refined)");
    const bool profile = !o.model.rates.empty();
    require(profile || !o.lambdas.empty(), "--lambda or --rates is required");
    require(!profile || o.model.segment > 0.0, "--segment is required with --rates");
    const auto lambdas = profile ? o.model.rates : o.lambdas;
    for (double l : lambdas) require(std::isfinite(l) && l > 0.0, "lambda must be > 0");
    const auto service = o.service.spec();
    const auto targets = o.target.targets();
    const auto dir = out_dir(o.common);

    RefinedTuning tuning = o.tuning;
    tuning.threads = resolve_threads(o.common.threads);
    std::vector<StaffingDecision> decisions;
    std::vector<std::pair<double, RefinedResult>> runs;
    bool all_converged = true;
    for (const auto& t : targets) {
        std::optional<RefinedResult> refined;
        if (o.rule == "refined") {
            const double lmin = *std::min_element(lambdas.begin(), lambdas.end());
            refined = refined_alpha_rule({lmin, o.model.kappa, o.model.sigma, o.model.alpha}, service, t, tuning,
                                         o.common.seed);
            all_converged = all_converged && refined->converged;
            runs.emplace_back(t.epsilon, *refined);
        }
        for (double lam : lambdas) {
            auto d = refined ? alpha_rule_with_coefficient(lam, o.model.alpha, refined->delta_star, service.mu(), t)
                             : analytic_decision(o, o.rule, lam, service, t);
            out << d.rule << " lambda=" << io::general(lam) << " eps=" << io::general(t.epsilon) << " n=" << d.n;
            if (d.delta_star) out << " delta_star=" << io::fixed(*d.delta_star, 6);
            out << '\n';
            decisions.push_back(d);
        }
    }
    {
        auto f = open_out(dir / "decisions.csv");
        io::write_decisions(f, decisions);
    }
    if (profile) {
        for (std::size_t e = 0; e < targets.size(); ++e) {
            StaffingProfile p;
            p.starts.clear();
            p.levels.clear();
            for (std::size_t i = 0; i < lambdas.size(); ++i) {
                p.starts.push_back(o.model.segment * static_cast<double>(i));
                p.levels.push_back(decisions[e * lambdas.size() + i].n);
            }
            const std::string name = targets.size() == 1 ? "profile.csv" : "profile_eps" + io::fixed(targets[e].epsilon, 2) + ".csv";
            auto f = open_out(dir / name);
            io::write_profile(f, p);
        }
    }
    if (!runs.empty()) {
        auto f = open_out(o.trace.empty() ? dir / "refined_trace.csv" : fs::path(o.trace));
        f << "epsilon,iteration,delta,n_real,servers,m_value,step\n";
        for (const auto& [eps, r] : runs)
            for (const auto& s : r.trace)
                f << io::general(eps) << ',' << s.iteration << ',' << io::general(s.delta) << ',' << io::general(s.n_real)
                  << ',' << s.servers << ',' << io::fixed(s.m_value, 6) << ',' << io::general(s.step) << '\n';
        for (const auto& [eps, r] : runs)
            out << "refined eps=" << io::general(eps) << ": " << r.status << " after " << r.trace.size()
                << " iterations, delta0=" << io::fixed(r.delta0, 6) << " delta_star=" << io::fixed(r.delta_star, 6) << '\n';
    }
    return all_converged ? kOk : kNonConvergence;
}

// ---- evaluate ----

struct EvaluateOpts {
    Common common;
    std::string profile;
    std::string arrivals;
    double cycle = 0.0;
    ServiceOpts service;
    double probe_step = 0.1;
    bool taylor = false;
    std::string counts;
    double delta = 0.0;
};

int cmd_evaluate(const EvaluateOpts& o, std::ostream& out) {
    const bool delay = !o.profile.empty() || !o.arrivals.empty();
    require(delay || o.taylor, "nothing to evaluate: give --profile and --arrivals, or --taylor with --counts");
    const auto dir = out_dir(o.common);
    if (delay) {
        require(!o.profile.empty() && !o.arrivals.empty(), "--profile and --arrivals go together");
        require(o.cycle > 0.0, "--cycle must be > 0");
        require(o.probe_step > 0.0, "probe-step must be > 0");
        auto pin = open_in(o.profile);
        auto profile = io::read_profile(pin, o.cycle);
        auto ain = open_in(o.arrivals);
        const auto table = io::read_arrivals(ain);
        require(!table.cycles.empty(), "arrival file has no rows");
        const auto last = table.cycles.rbegin()->first;
        std::vector<ArrivalPath> cycles(static_cast<std::size_t>(last) + 1);
        for (const auto& [j, ts] : table.cycles) {
            for (double t : ts) require(t <= o.cycle, "timestamp beyond the cycle length in cycle " + std::to_string(j));
            cycles[static_cast<std::size_t>(j)].timestamps = ts;
        }
        for (auto& c : cycles) c.horizon = o.cycle;
        const auto stream_path = concatenate_cycles(cycles, o.cycle);
        const auto q = simulate_queue(stream_path, o.service.spec(), Capacity::varying(profile), o.common.seed);
        const auto probes = probe_grid(0.0, o.cycle - o.probe_step, o.probe_step);
        const auto d = delay_prob_timeofday(q, profile, o.cycle, cycles.size(), probes);
        auto f = open_out(dir / "delay.csv");
        io::write_delay(f, d);
        out << "evaluated " << cycles.size() << " cycles, mean time-of-day delay probability "
            << io::fixed(d.average(), 6) << '\n';
    }
    if (o.taylor) {
        require(!o.counts.empty(), "--taylor needs --counts");
        require(o.delta > 0.0, "--taylor needs --delta");
        auto in = open_in(o.counts);
        const auto fit = taylor_regression(io::read_counts(in, o.delta));
        auto f = open_out(dir / "taylor.csv");
        f << "alpha_hat,intercept_c,r_squared,points\n"
          << io::general(fit.alpha_hat) << ',' << io::general(fit.intercept_c) << ',' << io::general(fit.r_squared)
          << ',' << fit.points << '\n';
        out << "taylor alpha_hat=" << io::fixed(fit.alpha_hat, 6) << " c=" << io::fixed(fit.intercept_c, 6)
            << " r_squared=" << io::fixed(fit.r_squared, 6) << '\n';
    }
    return kOk;
}

// ---- repro ----

struct ReproOpts {
    Common common;
    bool staffing_table = false;
    bool delay_curves = false;
    bool refined = true;
    std::size_t train_m = 1000;
    std::size_t reps = 200;
    double horizon = 48.0;
    double warmup = 24.0;
};

int cmd_repro(const ReproOpts& o, std::ostream& out) {
    const bool both = !o.staffing_table && !o.delay_curves;
    require(o.reps >= 1 && o.train_m >= 2, "reps and train-m must be positive");
    const auto dir = out_dir(o.common);
    const unsigned threads = resolve_threads(o.common.threads);
    const auto service = reference_service();
    const std::vector<double> lambdas{150.0, 600.0, 2400.0};
    const std::vector<QosTarget> targets{QosTarget::from_epsilon(0.05), QosTarget::from_epsilon(0.15)};
    RefinedTuning tuning;
    tuning.threads = threads;
    bool converged = true;

    StaffingTable table;
    if (o.staffing_table || both) {
        const auto train = simulate_counts(ArrivalModelSpec::m5(reference_params(100.0)), 144, 1.0 / 6.0, o.train_m,
                                           derive_seed(o.common.seed, stream::datasets, 0), 0.0, threads);
        FitOptions fo;
        fo.seed = o.common.seed;
        const auto fits = fit_models(train, {ModelTag::m1, ModelTag::m2, ModelTag::m3, ModelTag::m4}, fo);
        table = staffing_table(fits, reference_params(100.0), service, lambdas, targets,
                               o.refined ? std::optional<RefinedTuning>(tuning) : std::nullopt, o.common.seed);
        for (const auto& r : table.refined) converged = converged && r.converged;
        auto f = open_out(dir / "staffing_table.csv");
        f << "model,rule,lambda,epsilon,n,delta_star\n";
        for (const auto& r : table.rows) {
            f << r.model << ',' << r.rule << ',' << io::general(r.lambda) << ',' << io::general(r.epsilon) << ',' << r.n
              << ',' << (r.delta_star ? io::general(*r.delta_star) : "") << '\n';
            out << r.model << ' ' << r.rule << " lambda=" << r.lambda << " eps=" << r.epsilon << " n=" << r.n << '\n';
        }
    }
    if (o.delay_curves || both) {
        auto f = open_out(dir / "delay_curves.csv");
        f << "capacity,lambda,epsilon,rule,n,average_probability,delayed_fraction\n";
        for (std::size_t e = 0; e < targets.size(); ++e) {
            const auto& t = targets[e];
            std::optional<RefinedResult> refined;
            if (o.refined) {
                refined = refined_alpha_rule(reference_params(100.0), service, t, tuning, o.common.seed);
                converged = converged && refined->converged;
            }
            for (double lam : lambdas) {
                const auto spec = ArrivalModelSpec::m5(reference_params(lam));
                const auto basic = basic_alpha_rule(reference_params(lam), service, t);
                std::vector<std::pair<std::string, int>> levels{{"basic-alpha", basic.n}};
                if (refined)
                    levels.emplace_back("refined-alpha",
                                        alpha_rule_with_coefficient(lam, 0.5, refined->delta_star, service.mu(), t).n);
                const auto seed = derive_seed(o.common.seed, stream::datasets, static_cast<std::uint64_t>(lam) * 10 + e);
                const auto inf = stationary_delay(spec, service, basic.n, true, o.reps, o.horizon, o.warmup, seed, threads);
                f << "infinite," << io::general(lam) << ',' << io::general(t.epsilon) << ",basic-alpha," << basic.n << ','
                  << io::fixed(inf.average(), 6) << ",\n";
                out << "infinite lambda=" << lam << " eps=" << t.epsilon << " basic-alpha n=" << basic.n
                    << " P=" << io::fixed(inf.average(), 4) << '\n';
                for (const auto& [rule, n] : levels) {
                    const auto fin = stationary_delay(spec, service, n, false, o.reps, o.horizon, o.warmup, seed, threads);
                    f << "finite," << io::general(lam) << ',' << io::general(t.epsilon) << ',' << rule << ',' << n << ','
                      << io::fixed(fin.average(), 6) << ',' << io::fixed(fin.delayed_fraction, 6) << '\n';
                    out << "finite lambda=" << lam << " eps=" << t.epsilon << ' ' << rule << " n=" << n
                        << " P=" << io::fixed(fin.average(), 4) << '\n';
                }
            }
        }
    }
    return converged ? kOk : kNonConvergence;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Inserts the options of a `--config` file after the subcommand name, skipping keys already given as flags.
std::vector<std::string> expand_config(const CLI::App& app, std::vector<std::string> args) {
    const auto cmd = std::find_if(args.begin(), args.end(), [](const std::string& a) { return !a.empty() && a[0] != '-'; });
    if (cmd == args.end()) return args;
    const CLI::App* sub = app.get_subcommand_no_throw(*cmd);
    if (sub == nullptr) return args;
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;
    auto in = open_in(path);
    std::vector<std::string> extra;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        const auto hash = line.find_first_of("#;");
        line = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError(path + ":" + std::to_string(row) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        std::replace(key.begin(), key.end(), '_', '-');
        const CLI::Option* opt = key == "config" ? nullptr : sub->get_option_no_throw("--" + key);
        if (opt == nullptr) throw ValidationError(path + ":" + std::to_string(row) + ": unknown key '" + key + "'");
        if (given_on_command_line(args, "--" + key)) continue;
        if (opt->get_expected_max() == 0) {
            if (value == "true" || value == "1" || value == "yes" || value == "on") extra.push_back("--" + key);
            else if (!(value == "false" || value == "0" || value == "no" || value == "off"))
                throw ValidationError(path + ":" + std::to_string(row) + ": '" + key + "' expects true or false");
        } else {
            extra.push_back("--" + key);
            extra.push_back(value);
        }
    }
    args.insert(cmd + 1, extra.begin(), extra.end());
    return args;
}

std::uint64_t seed_from_env() {
    const char* s = std::getenv("TAYLOR_STAFF_SEED");
    if (s == nullptr || *s == '\0') return 1;
    std::uint64_t v = 0;
    const std::string str(s);
    auto [p, ec] = std::from_chars(str.data(), str.data() + str.size(), v);
    if (ec != std::errc() || p != str.data() + str.size())
        throw ValidationError("TAYLOR_STAFF_SEED must be a non-negative integer, got '" + str + "'");
    return v;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::uint64_t env_seed = 1;
    try {
        env_seed = seed_from_env();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }

    CLI::App app{"Over-dispersed arrival modelling, queue simulation and staffing"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    SimulateOpts sim;
    std::vector<double> adl_dirichlet;
    double adl_shape = 100.0, adl_rate = 1.0 / 60.0;
    auto* s = app.add_subcommand("simulate", "generate arrival paths, counts, queue paths and delay estimates");
    add_common(s, sim.common);
    s->add_option("--model", sim.model.model, "arrival model m1..m5, or adl")->required();
    auto* sim_lambda = s->add_option("--lambda", sim.model.lambda, "mean arrival rate");
    add_model_params(s, sim.model);
    s->add_option("--init", sim.model.init, "intensity start: stationary, lambda or fixed");
    s->add_option("--x0", sim.model.x0, "initial intensity for --init fixed");
    s->add_option("--rates", sim.model.rates, "comma-separated segment rates (non-stationary)")->delimiter(',');
    s->add_option("--segment", sim.model.segment, "segment length for --rates or the ADL model");
    auto* sim_horizon = s->add_option("--horizon", sim.horizon, "path length in hours");
    s->add_option("--reps", sim.reps, "number of replications (cycles for adl)");
    add_service(s, sim.service);
    s->add_option("--servers", sim.servers, "number of servers, 0 = infinite");
    s->add_option("--threshold", sim.threshold, "exceedance threshold for infinite servers (default: the model's rule)");
    s->add_option("--eps", sim.target.eps, "target for the default threshold")->delimiter(',');
    s->add_option("--beta", sim.target.beta, "override beta for the default threshold");
    s->add_option("--warmup", sim.warmup, "start of the probe window");
    s->add_option("--probe-step", sim.probe_step, "probe spacing");
    s->add_option("--delta", sim.delta, "count interval; writes counts.csv");
    s->add_flag("--queue-paths", sim.queue_paths, "also write number-in-system paths");
    s->add_option("--step", sim.step, "intensity discretization step");
    s->add_option("--adl-dirichlet", adl_dirichlet, "ADL Dirichlet concentrations (default: built-in synthetic day)")
        ->delimiter(',');
    s->add_option("--adl-shape", adl_shape, "ADL gamma shape of the daily total");
    s->add_option("--adl-rate", adl_rate, "ADL gamma rate of the daily total");

    FitOpts fit;
    auto* f = app.add_subcommand("fit", "fit arrival models to a count matrix");
    add_common(f, fit.common);
    f->add_option("--counts", fit.counts, "count matrix CSV")->required();
    f->add_option("--delta", fit.delta, "interval length of the count columns")->required();
    f->add_option("--models", fit.models, "comma-separated models m1..m5")->delimiter(',');
    f->add_option("--two-step", fit.two_step, "fix segment rates by SIPP: avg, min, max or mix");
    f->add_option("--sub-intervals", fit.h, "sub-intervals per staffing segment for --two-step");
    f->add_option("--day-offset", fit.day_offset, "time of day at the start of a cycle (SIPP mix)");
    f->add_option("--restarts", fit.restarts, "optimizer restarts");
    f->add_option("--max-evals", fit.max_evals, "evaluation budget per restart");
    f->add_flag("--joint-lambda", fit.joint_lambda, "optimize lambda jointly instead of profiling it");
    f->add_option("--convention", fit.convention, "count covariance convention: stationary, fixed or mixed");

    StaffOpts staff;
    auto* st = app.add_subcommand("staff", "compute staffing levels");
    add_common(st, staff.common);
    st->add_option("--rule", staff.rule, "sqrt, sqrt-cir, linear, alpha-static, basic-alpha or refined")->required();
    st->add_option("--lambda", staff.lambdas, "arrival rate(s), comma-separated")->delimiter(',');
    st->add_option("--rates", staff.model.rates, "segment rates; writes profile.csv")->delimiter(',');
    st->add_option("--segment", staff.model.segment, "segment length for --rates");
    add_model_params(st, staff.model);
    add_service(st, staff.service);
    st->add_option("--eps", staff.target.eps, "target delay probability (comma-separated list allowed)")->delimiter(',');
    st->add_option("--beta", staff.target.beta, "override beta = Phi^-1(1 - eps)");
    st->add_option("--lambda-sim", staff.tuning.lambda_sim, "refined: simulation arrival rate");
    st->add_option("--t-sim", staff.tuning.t_sim, "refined: probe time");
    st->add_option("--m", staff.tuning.m, "refined: replications per iteration");
    st->add_option("--step-b", staff.tuning.step_b, "refined: step size b in b / (i + c)^d");
    st->add_option("--step-c", staff.tuning.step_c, "refined: step size c");
    st->add_option("--step-d", staff.tuning.step_d, "refined: step size d");
    st->add_option("--tolerance", staff.tuning.tolerance, "refined: stop when |M - eps| <= tolerance");
    st->add_option("--max-iter", staff.tuning.max_iter, "refined: iteration cap");
    st->add_option("--window", staff.tuning.window, "refined: average probes over [t_sim - window, t_sim]");
    st->add_option("--trace", staff.trace, "refined: iteration trace CSV (default <out>/refined_trace.csv)");

    EvaluateOpts ev;
    auto* e = app.add_subcommand("evaluate", "time-of-day delay curve of a staffing profile on an arrival stream");
    add_common(e, ev.common);
    e->add_option("--profile", ev.profile, "staffing profile CSV");
    e->add_option("--arrivals", ev.arrivals, "arrival CSV, one cycle per cycle_index");
    e->add_option("--cycle", ev.cycle, "cycle length T");
    add_service(e, ev.service);
    e->add_option("--probe-step", ev.probe_step, "time-of-day probe spacing");
    e->add_flag("--taylor", ev.taylor, "Taylor regression on --counts");
    e->add_option("--counts", ev.counts, "count matrix CSV for --taylor");
    e->add_option("--delta", ev.delta, "interval length of the count columns for --taylor");

    ReproOpts rp;
    auto* r = app.add_subcommand("repro", "staffing table and delay experiments for the synthetic setting");
    add_common(r, rp.common);
    r->add_flag("--staffing-table", rp.staffing_table, "staffing levels of all rules");
    r->add_flag("--delay-curves", rp.delay_curves, "infinite- and finite-server delay experiments");
    r->add_flag("!--no-refined", rp.refined, "skip the refined alpha rule");
    r->add_option("--train-m", rp.train_m, "training paths for the fitted rules");
    r->add_option("--reps", rp.reps, "replications per delay experiment");
    r->add_option("--horizon", rp.horizon, "replication length");
    r->add_option("--warmup", rp.warmup, "start of the probe window");

    for (Common* c : {&sim.common, &fit.common, &staff.common, &ev.common, &rp.common}) c->seed = env_seed;

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = expand_config(app, std::move(args));
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kValidation;
    }
    std::reverse(args.begin(), args.end());

    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex, out, err);
        return kUsage;
    }

    if (s->parsed() && sim.model.model != "adl" && sim.model.rates.empty() &&
        (sim_lambda->count() == 0 || sim_horizon->count() == 0)) {
        err << "error: simulate needs --lambda and --horizon for a stationary model\n" << s->help();
        return kUsage;
    }

    try {
        if (s->parsed()) {
            if (sim.model.model == "adl") return cmd_simulate_adl(sim, adl_dirichlet, adl_shape, adl_rate, out);
            return cmd_simulate(sim, out);
        }
        if (f->parsed()) return cmd_fit(fit, out);
        if (st->parsed()) return cmd_staff(staff, out);
        if (e->parsed()) return cmd_evaluate(ev, out);
        if (r->parsed()) return cmd_repro(rp, out);
    } catch (const ParseError& ex) {
        err << "error: " << ex.what() << '\n';
        return kValidation;
    } catch (const ValidationError& ex) {
        err << "error: " << ex.what() << '\n';
        return kValidation;
    } catch (const IoFailure& ex) {
        err << "error: " << ex.what() << '\n';
        return kValidation;
    } catch (const NumericalError& ex) {
        err << "error: " << ex.what() << '\n';
        return kNonConvergence;
    }
    return kUsage;
}

}  // namespace taylorstaff::cli
