#pragma once

// Gaussian (heavy-traffic) maximum likelihood for M1-M5, SIPP rate estimates and AIC/BIC selection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "taylorstaff/analytics.hpp"
#include "taylorstaff/arrivals.hpp"
#include "taylorstaff/errors.hpp"
#include "taylorstaff/optimize.hpp"
#include "taylorstaff/rng.hpp"

namespace taylorstaff {

enum class ModelTag { m1 = 1, m2, m3, m4, m5 };

inline std::string to_string(ModelTag t) { return "m" + std::to_string(static_cast<int>(t)); }

inline ModelTag parse_model_tag(const std::string& s) {
    if (s.size() == 2 && (s[0] == 'm' || s[0] == 'M') && s[1] >= '1' && s[1] <= '5')
        return static_cast<ModelTag>(s[1] - '0');
    throw ValidationError("unknown model '" + s + "' (expected m1..m5)");
}

struct FitOptions {
    bool joint_lambda = false;  // optimize lambda with the other parameters instead of profiling it
    std::size_t restarts = 5;
    std::size_t max_evals = 10000;
    std::uint64_t seed = 1;
    CovConvention convention = CovConvention::stationary;
};

struct FitResult {
    ModelTag model = ModelTag::m1;
    std::vector<std::pair<std::string, double>> params;
    std::vector<double> rates;  // fixed segment rates of a two-step fit
    double log_likelihood = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    int q = 0;
    std::size_t m = 0;
    std::size_t evaluations = 0;
    bool converged = false;
    bool jittered = false;
    bool two_step = false;
    std::string data_id;
    std::string note;

    [[nodiscard]] double param(const std::string& name) const {
        for (const auto& [k, v] : params)
            if (k == name) return v;
        throw ValidationError("fit has no parameter '" + name + "'");
    }
    [[nodiscard]] bool has_param(const std::string& name) const {
        return std::any_of(params.begin(), params.end(), [&](const auto& kv) { return kv.first == name; });
    }
};

inline void set_information_criteria(FitResult& r) {
    r.aic = 2.0 * r.q - 2.0 * r.log_likelihood;
    r.bic = r.q * std::log(static_cast<double>(r.m)) - 2.0 * r.log_likelihood;
}

inline std::string data_fingerprint(const CountMatrix& d) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) h = (h ^ b[i]) * 1099511628211ULL;
    };
    mix(&d.m, sizeof d.m);
    mix(&d.k, sizeof d.k);
    mix(&d.delta, sizeof d.delta);
    mix(d.counts.data(), d.counts.size() * sizeof(std::int64_t));
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

// Sufficient statistics of a count matrix for the Gaussian likelihood.
struct CountSummary {
    std::size_t m = 0;
    std::size_t k = 0;
    double delta = 1.0;
    Eigen::VectorXd mean;       // sample mean vector
    Eigen::MatrixXd scatter_root;  // C with C C^T = sum_j (N_j - mean)(N_j - mean)^T
    Eigen::VectorXd column_sums;
    double log_factorials = 0.0;
    std::string id;

    explicit CountSummary(const CountMatrix& d) : m(d.m), k(d.k), delta(d.delta), id(data_fingerprint(d)) {
        d.validate();
        require(d.m >= 2, "fitting needs at least 2 cycles");
        const auto K = static_cast<Eigen::Index>(k);
        mean = Eigen::VectorXd::Zero(K);
        column_sums = Eigen::VectorXd::Zero(K);
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t i = 0; i < k; ++i) {
                const auto c = static_cast<double>(d.at(j, i));
                column_sums(static_cast<Eigen::Index>(i)) += c;
                log_factorials += std::lgamma(c + 1.0);
            }
        mean = column_sums / static_cast<double>(m);
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(K, K);
        Eigen::VectorXd x(K);
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t i = 0; i < k; ++i) x(static_cast<Eigen::Index>(i)) = static_cast<double>(d.at(j, i));
            x -= mean;
            S.selfadjointView<Eigen::Lower>().rankUpdate(x);
        }
        S = S.selfadjointView<Eigen::Lower>();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        scatter_root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }

    [[nodiscard]] double grand_rate() const { return mean.mean() / delta; }
};

struct GaussianLogLik {
    double value = -std::numeric_limits<double>::infinity();
    bool jittered = false;
};

// sum_j log MVN(N_j; mu, Sigma) with log det Sigma.
inline GaussianLogLik gaussian_log_likelihood(const CountSummary& s, const Eigen::VectorXd& mu, Eigen::MatrixXd sigma) {
    GaussianLogLik out;
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        const double jitter = 1e-8 * sigma.diagonal().mean();
        sigma.diagonal().array() += jitter;
        llt.compute(sigma);
        out.jittered = true;
        if (llt.info() != Eigen::Success) return out;
    }
    const auto& L = llt.matrixL();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < sigma.rows(); ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
    const Eigen::MatrixXd W = L.solve(s.scatter_root);
    const Eigen::VectorXd z = L.solve(s.mean - mu);
    const double m = static_cast<double>(s.m), k = static_cast<double>(s.k);
    const double quad = W.squaredNorm() + m * z.squaredNorm();
    out.value = -0.5 * k * m * std::log(2.0 * std::numbers::pi) - 0.5 * m * logdet - 0.5 * quad;
    return out;
}

// Exact Poisson log-likelihood with segment means rates[i] * delta.
inline double poisson_log_likelihood(const CountSummary& s, const std::vector<double>& rates) {
    double ll = -s.log_factorials;
    for (std::size_t i = 0; i < s.k; ++i) {
        const double mu = rates[rates.size() == 1 ? 0 : i] * s.delta;
        ll += s.column_sums(static_cast<Eigen::Index>(i)) * std::log(mu) - static_cast<double>(s.m) * mu;
    }
    return ll;
}

// Log-likelihood of a fully specified model on the data (M1 exact Poisson, others Gaussian).
inline double model_log_likelihood(const CountMatrix& data, const ArrivalModelSpec& model,
                                   CovConvention conv = CovConvention::stationary) {
    CountSummary s(data);
    if (std::holds_alternative<ModelM1>(model.variant))
        return poisson_log_likelihood(s, segment_levels(model, s.k, s.delta));
    auto mv = mvn_moments(model, s.k, s.delta, conv);
    return gaussian_log_likelihood(s, mv.mean_vector, mv.covariance).value;
}

namespace detail {

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double inv_logit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Shared state of one model fit: fixed or profiled rates plus the parameter transform.
struct FitProblem {
    const CountSummary* data = nullptr;
    ModelTag model = ModelTag::m5;
    std::vector<double> rates;  // size 1 for stationary data
    bool joint_lambda = false;
    CovConvention convention = CovConvention::stationary;
    bool any_jitter = false;

    [[nodiscard]] std::size_t dim() const {
        std::size_t d = 0;
        switch (model) {
            case ModelTag::m1: d = 0; break;
            case ModelTag::m2: d = 1; break;
            case ModelTag::m3: d = 2; break;
            case ModelTag::m4: d = 2; break;
            case ModelTag::m5: d = 3; break;
        }
        return d + (joint_lambda ? 1 : 0);
    }

    struct Natural {
        double lambda_scale = 1.0;
        double alpha = 0.0, sigma_y = 0.0, sigma_g = 0.0, kappa = 0.0, sigma = 0.0;
    };

    [[nodiscard]] Natural natural(const std::vector<double>& x) const {
        Natural n;
        std::size_t o = 0;
        if (joint_lambda) n.lambda_scale = std::exp(x[o++]) / rates[0];
        switch (model) {
            case ModelTag::m1: break;
            case ModelTag::m2: n.sigma_g = std::exp(x[o]); n.alpha = 1.0; break;
            case ModelTag::m3: n.alpha = inv_logit(x[o]); n.sigma_y = std::exp(x[o + 1]); break;
            case ModelTag::m4: n.kappa = std::exp(x[o]); n.sigma = std::exp(x[o + 1]); break;
            case ModelTag::m5:
                n.alpha = inv_logit(x[o]);
                n.kappa = std::exp(x[o + 1]);
                n.sigma = std::exp(x[o + 2]);
                break;
        }
        return n;
    }

    [[nodiscard]] std::vector<double> level_vector(double scale) const {
        std::vector<double> lv(data->k);
        for (std::size_t i = 0; i < data->k; ++i) lv[i] = rates[rates.size() == 1 ? 0 : i] * scale;
        return lv;
    }

    // Feller ratio sigma^2 / (2 kappa lambda_min^(1-alpha)); > 1 is infeasible.
    [[nodiscard]] double feller_ratio(const Natural& n) const {
        if (model != ModelTag::m4 && model != ModelTag::m5) return 0.0;
        const double lmin = *std::min_element(rates.begin(), rates.end()) * n.lambda_scale;
        return n.sigma * n.sigma / (2.0 * n.kappa * std::pow(lmin, 1.0 - n.alpha));
    }

    double log_likelihood(const std::vector<double>& x) {
        const Natural n = natural(x);
        const auto lv = level_vector(n.lambda_scale);
        if (model == ModelTag::m1) return poisson_log_likelihood(*data, lv);
        const auto K = static_cast<Eigen::Index>(data->k);
        Eigen::VectorXd mu(K);
        for (Eigen::Index i = 0; i < K; ++i) mu(i) = lv[static_cast<std::size_t>(i)] * data->delta;
        Eigen::MatrixXd S;
        switch (model) {
            case ModelTag::m2: S = static_count_covariance(lv, 1.0, n.sigma_g, data->delta); break;
            case ModelTag::m3: S = static_count_covariance(lv, n.alpha, n.sigma_y, data->delta); break;
            default: S = gcir_count_covariance(lv, n.alpha, n.kappa, n.sigma, data->delta, convention); break;
        }
        auto r = gaussian_log_likelihood(*data, mu, std::move(S));
        any_jitter = any_jitter || r.jittered;
        return r.value;
    }

    // Negative penalized log-likelihood for the minimizer.
    double objective(const std::vector<double>& x) {
        for (double v : x)
            if (!std::isfinite(v) || std::abs(v) > 30.0) return 1e300;
        const double ratio = feller_ratio(natural(x));
        if (ratio > 1.0) return 1e12 * ratio;
        return -log_likelihood(x);
    }
};

// Moment-based start: kappa from the decay of average autocovariances, scale from the excess variance.
inline std::vector<double> start_point(const CountMatrix& data, const FitProblem& pb, double alpha, double kappa_mult) {
    const auto var = data.column_variances();
    const auto mean = data.column_means();
    const std::size_t k = data.k;
    const double delta = data.delta;
    double excess = 0.0, lvl = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        excess += std::max(var[i] - mean[i], 0.05 * mean[i]);
        lvl += std::pow(pb.rates[pb.rates.size() == 1 ? 0 : i], alpha + 1.0);
    }
    excess /= static_cast<double>(k);
    lvl /= static_cast<double>(k);

    auto autocov = [&](std::size_t lag) {
        if (lag >= k) return 0.0;
        double s = 0.0;
        std::size_t n = 0;
        for (std::size_t j = 0; j < data.m; ++j)
            for (std::size_t i = 0; i + lag < k; ++i) {
                s += (static_cast<double>(data.at(j, i)) - mean[i]) * (static_cast<double>(data.at(j, i + lag)) - mean[i + lag]);
                ++n;
            }
        return n ? s / static_cast<double>(n) : 0.0;
    };
    double kappa = 1.0 / (static_cast<double>(k) * delta);
    const double c1 = autocov(1), c2 = autocov(2);
    if (c1 > 0.0 && c2 > 0.0 && c2 < c1) kappa = -std::log(c2 / c1) / delta;
    kappa = std::clamp(kappa * kappa_mult, 1e-4, 1e3);

    std::vector<double> x;
    if (pb.joint_lambda) x.push_back(std::log(pb.rates[0]));
    const double lmin = *std::min_element(pb.rates.begin(), pb.rates.end());
    switch (pb.model) {
        case ModelTag::m1: break;
        case ModelTag::m2: {
            const double c = std::max(c1, 1e-3 * excess);
            x.push_back(0.5 * std::log(c / (lvl * delta * delta)));
            break;
        }
        case ModelTag::m3: {
            const double c = std::max(c1, 1e-3 * excess);
            x.push_back(logit(alpha));
            x.push_back(0.5 * std::log(c / (lvl * delta * delta)));
            break;
        }
        case ModelTag::m4:
        case ModelTag::m5: {
            const double kd = kappa * delta;
            const double shape = delta / (kappa * kappa) * (1.0 + std::expm1(-kd) / kd);
            double s2 = excess / (lvl * shape);
            s2 = std::min(s2, 0.9 * 2.0 * kappa * std::pow(lmin, 1.0 - alpha));
            if (pb.model == ModelTag::m5) x.push_back(logit(alpha));
            x.push_back(std::log(kappa));
            x.push_back(0.5 * std::log(s2));
            break;
        }
    }
    return x;
}

inline int parameter_count(ModelTag t, bool count_lambda) {
    int q = 0;
    switch (t) {
        case ModelTag::m1: q = 0; break;
        case ModelTag::m2: q = 1; break;
        case ModelTag::m3: q = 2; break;
        case ModelTag::m4: q = 2; break;
        case ModelTag::m5: q = 3; break;
    }
    return q + (count_lambda ? 1 : 0);
}

inline FitResult run_fit(const CountMatrix& data, const CountSummary& summary, FitProblem pb, const FitOptions& opt,
                         bool two_step) {
    FitResult r;
    r.model = pb.model;
    r.m = summary.m;
    r.data_id = summary.id;
    r.two_step = two_step;
    r.q = parameter_count(pb.model, !two_step);

    std::vector<double> best_x;
    double best_f = std::numeric_limits<double>::infinity();
    bool best_converged = false;
    const std::size_t dim = pb.dim();
    if (dim == 0) {
        best_x = {};
        best_f = pb.objective(best_x);
        best_converged = true;
        r.evaluations = 1;
    } else {
        Engine eng = make_engine(derive_seed(opt.seed, stream::restarts, static_cast<std::uint64_t>(pb.model)));
        std::uniform_real_distribution<double> ua(0.05, 0.95), uk(-1.5, 1.5);
        const std::size_t restarts = std::max<std::size_t>(1, opt.restarts);
        for (std::size_t s = 0; s < restarts; ++s) {
            const double alpha = s == 0 ? 0.5 : ua(eng);
            const double kmult = s == 0 ? 1.0 : std::exp(uk(eng));
            auto x0 = start_point(data, pb, alpha, kmult);
            if (pb.objective(x0) >= 1e12) continue;
            std::vector<double> scale(x0.size(), 0.5);
            auto run = nelder_mead([&](const std::vector<double>& x) { return pb.objective(x); }, x0, scale, opt.max_evals);
            r.evaluations += run.evaluations;
            if (run.converged) {
                // restart the simplex at the optimum to guard against premature collapse
                auto polish = nelder_mead([&](const std::vector<double>& x) { return pb.objective(x); }, run.x,
                                          std::vector<double>(x0.size(), 0.05), opt.max_evals);
                r.evaluations += polish.evaluations;
                if (polish.f <= run.f) run = polish;
            }
            if (run.f < best_f) {
                best_f = run.f;
                best_x = run.x;
                best_converged = run.converged;
            }
        }
        if (best_x.empty()) throw NumericalError("no feasible starting point for " + to_string(pb.model));
        if (!best_converged)
            throw NumericalError("optimizer did not converge for " + to_string(pb.model) + " within " +
                                 std::to_string(opt.max_evals) + " evaluations");
    }
    r.converged = best_converged;
    pb.any_jitter = false;
    r.log_likelihood = pb.log_likelihood(best_x);
    r.jittered = pb.any_jitter;
    const auto n = pb.natural(best_x);
    if (pb.rates.size() == 1) r.params.emplace_back("lambda", pb.rates[0] * n.lambda_scale);
    switch (pb.model) {
        case ModelTag::m1: break;
        case ModelTag::m2: r.params.emplace_back("sigma_g", n.sigma_g); break;
        case ModelTag::m3:
            r.params.emplace_back("alpha", n.alpha);
            r.params.emplace_back("sigma_y", n.sigma_y);
            break;
        case ModelTag::m4:
            r.params.emplace_back("kappa", n.kappa);
            r.params.emplace_back("sigma", n.sigma);
            break;
        case ModelTag::m5:
            r.params.emplace_back("alpha", n.alpha);
            r.params.emplace_back("kappa", n.kappa);
            r.params.emplace_back("sigma", n.sigma);
            break;
    }
    if (pb.rates.size() == 1) {
        const double lam = pb.rates[0] * n.lambda_scale;
        std::ostringstream os;
        os.precision(10);
        if (pb.model == ModelTag::m5) {
            os << "alpha is not identified from single-rate data; identified scale sigma^2*lambda^alpha = "
               << n.sigma * n.sigma * std::pow(lam, n.alpha);
            r.note = os.str();
        } else if (pb.model == ModelTag::m3) {
            os << "alpha is not identified from single-rate data; identified scale sigma_y^2*lambda^(alpha+1) = "
               << n.sigma_y * n.sigma_y * std::pow(lam, n.alpha + 1.0);
            r.note = os.str();
        }
    }
    if (two_step) r.rates = pb.rates;
    set_information_criteria(r);
    return r;
}

}  // namespace detail

// Stationary fit. lambda is profiled at the sample mean rate unless opt.joint_lambda.
inline FitResult fit_mle(const CountMatrix& data, ModelTag model, const FitOptions& opt = {}) {
    CountSummary summary(data);
    detail::FitProblem pb;
    pb.data = &summary;
    pb.model = model;
    pb.rates = {summary.grand_rate()};
    require(pb.rates[0] > 0.0, "data contain no arrivals");
    pb.joint_lambda = opt.joint_lambda && model != ModelTag::m1;
    pb.convention = opt.convention;
    return detail::run_fit(data, summary, pb, opt, false);
}

// Stationary arrival model with the fitted parameters at rate lambda.
inline ArrivalModelSpec fitted_model(const FitResult& f, double lambda) {
    switch (f.model) {
        case ModelTag::m1: return ArrivalModelSpec::m1(lambda);
        case ModelTag::m2: return ArrivalModelSpec::m2(lambda, f.param("sigma_g"));
        case ModelTag::m3: return ArrivalModelSpec::m3(lambda, f.param("alpha"), f.param("sigma_y"));
        case ModelTag::m4: return ArrivalModelSpec::m4(lambda, f.param("kappa"), f.param("sigma"));
        case ModelTag::m5: break;
    }
    return ArrivalModelSpec::m5({lambda, f.param("kappa"), f.param("sigma"), f.param("alpha")});
}

enum class SippKind { avg, min, max, mix };

struct TimeWindow {
    double from = 0.0;
    double to = 0.0;
    [[nodiscard]] bool contains(double t) const { return t >= from && t < to; }
};

struct SippVariant {
    SippKind kind = SippKind::avg;
    std::size_t h = 1;
    TimeWindow min_window{6.0, 9.0};
    TimeWindow max_window{16.0, 20.0};
    double day_offset = 0.0;  // time of day at the start of a cycle

    void validate() const {
        require(h >= 1, "h must be >= 1");
        if (kind == SippKind::mix)
            require(min_window.to <= max_window.from || max_window.to <= min_window.from, "Mix windows must be disjoint");
    }
};

inline SippKind parse_sipp_kind(const std::string& s) {
    if (s == "avg") return SippKind::avg;
    if (s == "min") return SippKind::min;
    if (s == "max") return SippKind::max;
    if (s == "mix") return SippKind::mix;
    throw ValidationError("unknown SIPP variant '" + s + "'");
}

// Sums groups of h sub-interval columns into segments of length h * delta.
inline CountMatrix aggregate_counts(const CountMatrix& sub, std::size_t h) {
    require(h >= 1, "h must be >= 1");
    require(sub.k % h == 0, "h must divide the number of sub-intervals");
    CountMatrix out(sub.m, sub.k / h, sub.delta * static_cast<double>(h));
    for (std::size_t j = 0; j < sub.m; ++j)
        for (std::size_t i = 0; i < sub.k; ++i) out.at(j, i / h) += sub.at(j, i);
    return out;
}

// Segment rates from sub-interval counts (sub.delta is the sub-interval length).
inline std::vector<double> sipp_estimate(const CountMatrix& sub, const SippVariant& v) {
    v.validate();
    sub.validate();
    require(sub.k % v.h == 0, "h must divide the number of sub-intervals per cycle");
    const std::size_t k = sub.k / v.h;
    const double seg = sub.delta * static_cast<double>(v.h);
    const auto means = sub.column_means();
    std::vector<double> out(k);
    for (std::size_t i = 0; i < k; ++i) {
        double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (std::size_t l = 0; l < v.h; ++l) {
            const double r = means[i * v.h + l] / sub.delta;  // h/(m Delta) sum_j N
            sum += r;
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        const double avg = sum / static_cast<double>(v.h);
        SippKind kind = v.kind;
        if (kind == SippKind::mix) {
            const double tod = v.day_offset + seg * static_cast<double>(i);
            kind = v.min_window.contains(tod) ? SippKind::min : v.max_window.contains(tod) ? SippKind::max : SippKind::avg;
        }
        out[i] = kind == SippKind::min ? lo : kind == SippKind::max ? hi : avg;
    }
    return out;
}

// Rates fixed from SIPP, remaining parameters by maximum likelihood. q counts only non-rate parameters.
inline FitResult two_step_fit(const CountMatrix& sub, ModelTag model, const SippVariant& sipp,
                              const FitOptions& opt = {}) {
    auto rates = sipp_estimate(sub, sipp);
    for (double r : rates) require(r > 0.0, "SIPP produced a zero rate; counts are too sparse");
    const CountMatrix data = aggregate_counts(sub, sipp.h);
    CountSummary summary(data);
    detail::FitProblem pb;
    pb.data = &summary;
    pb.model = model;
    pb.rates = std::move(rates);
    pb.joint_lambda = false;
    pb.convention = opt.convention;
    return detail::run_fit(data, summary, pb, opt, true);
}

struct RankingEntry {
    ModelTag model = ModelTag::m1;
    double aic = 0.0;
    double bic = 0.0;
    double delta_aic = 0.0;
    double delta_bic = 0.0;
    std::size_t rank_aic = 0;
    std::size_t rank_bic = 0;
    bool strong_aic = false;  // delta > 10 against the best model
    bool strong_bic = false;
};

struct ModelRanking {
    std::vector<RankingEntry> entries;  // sorted by AIC
    [[nodiscard]] ModelTag best_aic() const { return entries.front().model; }
    [[nodiscard]] ModelTag best_bic() const {
        return std::min_element(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.bic < b.bic; })->model;
    }
    [[nodiscard]] const RankingEntry& entry(ModelTag t) const {
        for (const auto& e : entries)
            if (e.model == t) return e;
        throw ValidationError("model not in ranking");
    }
};

// Ties in AIC/BIC go to the model with fewer parameters.
inline ModelRanking select_model(const std::vector<FitResult>& fits) {
    require(fits.size() >= 2, "model selection needs at least two fits");
    for (const auto& f : fits) require(f.data_id == fits.front().data_id, "fits were computed on different data");
    ModelRanking out;
    double best_aic = std::numeric_limits<double>::infinity(), best_bic = best_aic;
    for (const auto& f : fits) {
        best_aic = std::min(best_aic, f.aic);
        best_bic = std::min(best_bic, f.bic);
    }
    std::vector<std::size_t> order(fits.size());
    std::iota(order.begin(), order.end(), 0);
    auto rank_by = [&](auto key) {
        std::vector<std::size_t> o = order;
        std::stable_sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) {
            if (key(fits[a]) != key(fits[b])) return key(fits[a]) < key(fits[b]);
            return fits[a].q < fits[b].q;
        });
        std::vector<std::size_t> rank(fits.size());
        for (std::size_t r = 0; r < o.size(); ++r) rank[o[r]] = r + 1;
        return std::make_pair(o, rank);
    };
    auto [aic_order, aic_rank] = rank_by([](const FitResult& f) { return f.aic; });
    auto [bic_order, bic_rank] = rank_by([](const FitResult& f) { return f.bic; });
    (void)bic_order;
    for (std::size_t idx : aic_order) {
        const auto& f = fits[idx];
        RankingEntry e;
        e.model = f.model;
        e.aic = f.aic;
        e.bic = f.bic;
        e.delta_aic = f.aic - best_aic;
        e.delta_bic = f.bic - best_bic;
        e.rank_aic = aic_rank[idx];
        e.rank_bic = bic_rank[idx];
        e.strong_aic = e.delta_aic > 10.0;
        e.strong_bic = e.delta_bic > 10.0;
        out.entries.push_back(e);
    }
    return out;
}

}  // namespace taylorstaff
