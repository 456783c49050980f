#pragma once

// Arrival paths and count matrices for the five DSPP arrival models and the ADL day model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "taylorstaff/errors.hpp"
#include "taylorstaff/intensity.hpp"
#include "taylorstaff/rng.hpp"

namespace taylorstaff {

struct ModelM1 {
    double lambda = 1.0;
};
// Static mixing: rate lambda * G, G ~ Gamma with unit mean and sd sigma_g.
struct ModelM2 {
    double lambda = 1.0;
    double sigma_g = 0.0;
};
// Static mixing: rate lambda + lambda^((alpha+1)/2) * Y, Y ~ Normal(0, sigma_y^2), truncated at 0.
struct ModelM3 {
    double lambda = 1.0;
    double alpha = 0.5;
    double sigma_y = 0.0;
};
struct ModelM4 {
    double lambda = 1.0;
    double kappa = 0.1;
    double sigma = 0.0;
    InitSpec init = InitStationary{};
};
struct ModelM5 {
    GcirParams params;
};
using ModelVariant = std::variant<ModelM1, ModelM2, ModelM3, ModelM4, ModelM5>;

// Periodic piecewise-constant rate profile.
struct RateProfile {
    double delta = 1.0;
    std::vector<double> rates;

    [[nodiscard]] double period() const { return delta * static_cast<double>(rates.size()); }
    [[nodiscard]] std::size_t segment(double t) const {
        auto i = static_cast<std::size_t>(std::floor(t / delta));
        return i % rates.size();
    }
    [[nodiscard]] double min_rate() const { return *std::min_element(rates.begin(), rates.end()); }
};

struct ArrivalModelSpec {
    ModelVariant variant;
    std::optional<RateProfile> nonstationary;

    static ArrivalModelSpec m1(double lambda) { return {ModelM1{lambda}, std::nullopt}; }
    static ArrivalModelSpec m2(double lambda, double sigma_g) { return {ModelM2{lambda, sigma_g}, std::nullopt}; }
    static ArrivalModelSpec m3(double lambda, double alpha, double sigma_y) {
        return {ModelM3{lambda, alpha, sigma_y}, std::nullopt};
    }
    static ArrivalModelSpec m4(double lambda, double kappa, double sigma, InitSpec init = InitStationary{}) {
        return {ModelM4{lambda, kappa, sigma, init}, std::nullopt};
    }
    static ArrivalModelSpec m5(const GcirParams& p) { return {ModelM5{p}, std::nullopt}; }

    [[nodiscard]] int index() const { return static_cast<int>(variant.index()) + 1; }
    [[nodiscard]] std::string tag() const { return "m" + std::to_string(index()); }

    [[nodiscard]] double base_lambda() const {
        return std::visit(
            [](const auto& m) {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, ModelM5>) return m.params.lambda;
                else return m.lambda;
            },
            variant);
    }

    // Rates per segment; a single entry for the stationary model.
    [[nodiscard]] std::vector<double> rates() const {
        if (nonstationary) return nonstationary->rates;
        return {base_lambda()};
    }

    // Intensity parameters for the dynamic models (M4, M5).
    [[nodiscard]] std::optional<GcirParams> gcir() const {
        if (const auto* m4 = std::get_if<ModelM4>(&variant)) return GcirParams{m4->lambda, m4->kappa, m4->sigma, 0.0, m4->init};
        if (const auto* m5 = std::get_if<ModelM5>(&variant)) return m5->params;
        return std::nullopt;
    }

    void validate() const {
        if (nonstationary) {
            require(!nonstationary->rates.empty(), "rate profile must not be empty");
            require(nonstationary->delta > 0.0, "segment length must be > 0");
            for (double r : nonstationary->rates) require(std::isfinite(r) && r > 0.0, "segment rates must be > 0");
        } else {
            require(std::isfinite(base_lambda()) && base_lambda() > 0.0, "lambda must be > 0");
        }
        if (const auto* m2 = std::get_if<ModelM2>(&variant)) require(m2->sigma_g >= 0.0, "sigma_g must be >= 0");
        if (const auto* m3 = std::get_if<ModelM3>(&variant)) {
            require(m3->alpha >= 0.0 && m3->alpha <= 1.0, "alpha must lie in [0, 1]");
            require(m3->sigma_y >= 0.0, "sigma_y must be >= 0");
        }
        if (auto p = gcir()) {
            GcirParams q = *p;
            q.lambda = nonstationary ? nonstationary->min_rate() : q.lambda;
            validate_dynamic(q);
        }
    }
};

struct ArrivalPath {
    std::vector<double> timestamps;
    double horizon = 0.0;
    std::string model;
    std::uint64_t seed = 0;
    std::optional<double> static_rate;
    bool truncated = false;
    std::optional<IntensityPath> intensity;
};

struct CountMatrix {
    std::size_t m = 0;
    std::size_t k = 0;
    double delta = 1.0;
    std::vector<std::int64_t> counts;  // row-major m x k
    std::vector<double> segment_rates;
    std::size_t truncated_cycles = 0;

    CountMatrix() = default;
    CountMatrix(std::size_t rows, std::size_t cols, double d) : m(rows), k(cols), delta(d), counts(rows * cols, 0) {}

    [[nodiscard]] std::int64_t& at(std::size_t j, std::size_t i) { return counts[j * k + i]; }
    [[nodiscard]] std::int64_t at(std::size_t j, std::size_t i) const { return counts[j * k + i]; }
    [[nodiscard]] double cycle_length() const { return delta * static_cast<double>(k); }

    [[nodiscard]] std::vector<double> column_means() const {
        std::vector<double> out(k, 0.0);
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t i = 0; i < k; ++i) out[i] += static_cast<double>(at(j, i));
        for (double& v : out) v /= static_cast<double>(m);
        return out;
    }

    // Unbiased per-column sample variances.
    [[nodiscard]] std::vector<double> column_variances() const {
        auto mean = column_means();
        std::vector<double> out(k, 0.0);
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t i = 0; i < k; ++i) {
                double d = static_cast<double>(at(j, i)) - mean[i];
                out[i] += d * d;
            }
        for (double& v : out) v /= static_cast<double>(m > 1 ? m - 1 : 1);
        return out;
    }

    void validate() const {
        require(k >= 1, "count matrix needs at least one segment");
        require(delta > 0.0, "segment length must be > 0");
        require(counts.size() == m * k, "count matrix shape mismatch");
        for (auto c : counts) require(c >= 0, "counts must be nonnegative");
    }
};

struct GenerateOptions {
    double step = 0.01;
    bool keep_intensity = false;
};

namespace detail {

// Appends Poisson(mean) points placed uniformly on [a, b).
inline void place_uniform(double mean, double a, double b, Engine& eng, std::vector<double>& out) {
    if (!(mean > 0.0) || b <= a) return;
    const auto n = std::poisson_distribution<long long>(mean)(eng);
    if (n == 0) return;
    std::uniform_real_distribution<double> u(a, b);
    const std::size_t start = out.size();
    for (long long i = 0; i < n; ++i) out.push_back(u(eng));
    std::sort(out.begin() + static_cast<std::ptrdiff_t>(start), out.end());
}

inline std::vector<double> profile_rates(const ArrivalModelSpec& spec) { return spec.rates(); }

inline double profile_delta(const ArrivalModelSpec& spec, double horizon) {
    return spec.nonstationary ? spec.nonstationary->delta : horizon;
}

struct StaticDraw {
    double factor = 1.0;  // M2: lambda * G
    double y = 0.0;       // M3: lambda + lambda^((alpha+1)/2) Y
};

inline StaticDraw draw_static(const ModelVariant& v, Engine& eng) {
    StaticDraw s;
    if (const auto* m2 = std::get_if<ModelM2>(&v)) {
        if (m2->sigma_g > 0.0) {
            const double shape = 1.0 / (m2->sigma_g * m2->sigma_g);
            s.factor = std::gamma_distribution<double>(shape, 1.0 / shape)(eng);
        }
    } else if (const auto* m3 = std::get_if<ModelM3>(&v)) {
        if (m3->sigma_y > 0.0) s.y = std::normal_distribution<double>(0.0, m3->sigma_y)(eng);
    }
    return s;
}

// Realized static rate at mean level lam; second member reports truncation at 0.
inline std::pair<double, bool> static_rate(const ModelVariant& v, const StaticDraw& s, double lam) {
    if (std::holds_alternative<ModelM2>(v)) return {lam * s.factor, false};
    if (const auto* m3 = std::get_if<ModelM3>(&v)) {
        double r = lam + std::pow(lam, 0.5 * (m3->alpha + 1.0)) * s.y;
        if (r < 0.0) return {0.0, true};
        return {r, false};
    }
    return {lam, false};
}

// Integrated intensity over each of the k segments of one cycle, plus truncation flag.
inline std::pair<std::vector<double>, bool> segment_integrals(const ArrivalModelSpec& spec, std::size_t k,
                                                              double delta, double step, Engine& eng) {
    std::vector<double> out(k, 0.0);
    const double horizon = delta * static_cast<double>(k);
    const auto rates = spec.rates();
    const double seg_len = detail::profile_delta(spec, horizon);
    auto rate_at = [&](double t) { return rates.size() == 1 ? rates[0] : rates[static_cast<std::size_t>(std::floor(t / seg_len)) % rates.size()]; };

    if (auto p = spec.gcir()) {
        auto path = simulate_piecewise(*p, rates, seg_len, horizon, step, eng);
        // grid aligned with delta multiples only up to rounding: locate boundaries by interpolation
        std::size_t g = 0;
        for (std::size_t i = 0; i < k; ++i) {
            const double b = (i + 1 == k) ? horizon : delta * static_cast<double>(i + 1);
            while (g + 1 < path.grid.size() && path.grid[g + 1] <= b + 1e-12) ++g;
            double cum = path.cum_integral[g];
            if (g + 1 < path.grid.size() && path.grid[g] < b) {
                const double h = path.grid[g + 1] - path.grid[g];
                const double w = (b - path.grid[g]) / h;
                const double xb = path.values[g] + w * (path.values[g + 1] - path.values[g]);
                cum += 0.5 * (path.values[g] + xb) * (b - path.grid[g]);
            }
            out[i] = cum;
        }
        for (std::size_t i = k; i-- > 1;) out[i] -= out[i - 1];
        return {out, false};
    }

    const StaticDraw s = draw_static(spec.variant, eng);
    bool truncated = false;
    // piecewise-constant rates: integrate exactly over the overlap of each count segment with rate segments
    for (std::size_t i = 0; i < k; ++i) {
        const double a = delta * static_cast<double>(i), b = delta * static_cast<double>(i + 1);
        double t = a;
        while (t < b - 1e-12) {
            const double next = rates.size() == 1 ? b : std::min(b, (std::floor(t / seg_len + 1e-12) + 1.0) * seg_len);
            auto [r, trunc] = static_rate(spec.variant, s, rate_at(0.5 * (t + next)));
            truncated = truncated || trunc;
            out[i] += r * (next - t);
            t = next;
        }
    }
    return {out, truncated};
}

}  // namespace detail

inline ArrivalPath generate(const ArrivalModelSpec& spec, double horizon, std::uint64_t seed,
                            const GenerateOptions& opt = {}) {
    spec.validate();
    require(horizon > 0.0, "horizon must be > 0");
    Engine eng = make_engine(seed);
    ArrivalPath out;
    out.horizon = horizon;
    out.model = spec.tag();
    out.seed = seed;
    const auto rates = spec.rates();
    const double seg_len = detail::profile_delta(spec, horizon);

    if (auto p = spec.gcir()) {
        const double step = std::min(opt.step, horizon);
        auto path = detail::simulate_piecewise(*p, rates, seg_len, horizon, step, eng);
        for (std::size_t i = 0; i + 1 < path.grid.size(); ++i)
            detail::place_uniform(path.cum_integral[i + 1] - path.cum_integral[i], path.grid[i], path.grid[i + 1], eng,
                                  out.timestamps);
        if (opt.keep_intensity) out.intensity = std::move(path);
        return out;
    }

    const auto s = detail::draw_static(spec.variant, eng);
    double t = 0.0;
    while (t < horizon) {
        const double next = rates.size() == 1 ? horizon : std::min(horizon, (std::floor(t / seg_len + 1e-12) + 1.0) * seg_len);
        const double lam = rates.size() == 1 ? rates[0] : rates[static_cast<std::size_t>(std::floor(0.5 * (t + next) / seg_len)) % rates.size()];
        auto [r, trunc] = detail::static_rate(spec.variant, s, lam);
        out.truncated = out.truncated || trunc;
        if (rates.size() == 1) out.static_rate = r;
        detail::place_uniform(r * (next - t), t, next, eng, out.timestamps);
        t = next;
    }
    return out;
}

// Static-intensity DSPP path (M2 or M3): one rate draw per path, then a homogeneous Poisson path.
inline ArrivalPath generate_static_dspp(const ArrivalModelSpec& spec, double horizon, std::uint64_t seed) {
    require(std::holds_alternative<ModelM2>(spec.variant) || std::holds_alternative<ModelM3>(spec.variant),
            "generate_static_dspp needs an M2 or M3 model");
    return generate(spec, horizon, seed);
}

// One path per cycle of the rate profile; cycles restart from the configured initial condition.
inline std::vector<ArrivalPath> generate_nonstationary(const ArrivalModelSpec& spec, std::size_t cycles,
                                                       std::uint64_t seed, const GenerateOptions& opt = {},
                                                       unsigned threads = 1) {
    require(spec.nonstationary.has_value(), "non-stationary generation needs a rate profile");
    require(!spec.nonstationary->rates.empty(), "rate vector must not be empty");
    spec.validate();
    std::vector<ArrivalPath> out(cycles);
    const double T = spec.nonstationary->period();
    parallel_for(cycles, threads, [&](std::size_t j) {
        out[j] = generate(spec, T, derive_seed(seed, stream::arrivals, j), opt);
    });
    return out;
}

// Counts only: m cycles of k segments of length delta. Per segment the count is Poisson with the
// trapezoid-integrated intensity, the same conditional law as binning a generated path.
inline CountMatrix simulate_counts(const ArrivalModelSpec& spec, std::size_t k, double delta, std::size_t m,
                                   std::uint64_t seed, double step = 0.0, unsigned threads = 1) {
    spec.validate();
    require(k >= 1 && m >= 1, "need k >= 1 and m >= 1");
    require(delta > 0.0, "delta must be > 0");
    if (step <= 0.0) step = default_step(delta);
    CountMatrix cm(m, k, delta);
    if (spec.nonstationary) cm.segment_rates = spec.nonstationary->rates;
    std::vector<char> trunc(m, 0);
    parallel_for(m, threads, [&](std::size_t j) {
        Engine eng = make_engine(derive_seed(seed, stream::arrivals, j));
        auto [integrals, t] = detail::segment_integrals(spec, k, delta, step, eng);
        trunc[j] = t ? 1 : 0;
        for (std::size_t i = 0; i < k; ++i)
            cm.at(j, i) = integrals[i] > 0.0 ? std::poisson_distribution<std::int64_t>(integrals[i])(eng) : 0;
    });
    cm.truncated_cycles = static_cast<std::size_t>(std::count(trunc.begin(), trunc.end(), 1));
    return cm;
}

struct AdlSpec {
    double total_shape = 1.0;
    double total_rate = 1.0;
    std::vector<double> dirichlet;
    double delta = 1.0;

    void validate() const {
        require(total_shape > 0.0 && total_rate > 0.0, "ADL total law parameters must be > 0");
        require(!dirichlet.empty(), "ADL needs at least one segment");
        for (double a : dirichlet) require(a > 0.0, "Dirichlet concentrations must be > 0");
        require(delta > 0.0, "segment length must be > 0");
    }
    [[nodiscard]] std::size_t k() const { return dirichlet.size(); }
    [[nodiscard]] double period() const { return delta * static_cast<double>(dirichlet.size()); }
    [[nodiscard]] double mean_total() const { return total_shape / total_rate; }
};

struct AdlSample {
    CountMatrix counts;
    std::vector<ArrivalPath> paths;
};

inline AdlSample generate_adl(const AdlSpec& spec, std::size_t cycles, std::uint64_t seed, unsigned threads = 1) {
    spec.validate();
    const std::size_t k = spec.k();
    AdlSample out{CountMatrix(cycles, k, spec.delta), std::vector<ArrivalPath>(cycles)};
    parallel_for(cycles, threads, [&](std::size_t j) {
        const std::uint64_t s = derive_seed(seed, stream::arrivals, j);
        Engine eng = make_engine(s);
        const double z = std::gamma_distribution<double>(spec.total_shape, 1.0 / spec.total_rate)(eng);
        std::vector<double> g(k);
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) total += g[i] = std::gamma_distribution<double>(spec.dirichlet[i], 1.0)(eng);
        ArrivalPath& path = out.paths[j];
        path.horizon = spec.period();
        path.model = "adl";
        path.seed = s;
        for (std::size_t i = 0; i < k; ++i) {
            const auto zi = static_cast<std::int64_t>(std::llround(g[i] / total * z));
            out.counts.at(j, i) = zi;
            const double a = spec.delta * static_cast<double>(i);
            std::uniform_real_distribution<double> u(a, a + spec.delta);
            const std::size_t start = path.timestamps.size();
            for (std::int64_t c = 0; c < zi; ++c) path.timestamps.push_back(u(eng));
            std::sort(path.timestamps.begin() + static_cast<std::ptrdiff_t>(start), path.timestamps.end());
        }
    });
    return out;
}

inline std::vector<std::int64_t> counts_from_timestamps(const ArrivalPath& path, double delta) {
    require(delta > 0.0, "delta must be > 0");
    const double ratio = path.horizon / delta;
    const double k_real = std::round(ratio);
    require(k_real >= 1.0 && std::abs(ratio - k_real) <= 1e-9 * std::max(1.0, ratio),
            "delta must divide the horizon");
    const auto k = static_cast<std::size_t>(k_real);
    std::vector<std::int64_t> out(k, 0);
    for (double t : path.timestamps) {
        auto i = static_cast<std::size_t>(std::floor(t / delta));
        if (i >= k) i = k - 1;  // t == horizon
        ++out[i];
    }
    return out;
}

inline CountMatrix counts_from_paths(const std::vector<ArrivalPath>& paths, double delta) {
    require(!paths.empty(), "no paths to count");
    auto first = counts_from_timestamps(paths[0], delta);
    CountMatrix cm(paths.size(), first.size(), delta);
    for (std::size_t j = 0; j < paths.size(); ++j) {
        auto row = j == 0 ? first : counts_from_timestamps(paths[j], delta);
        require(row.size() == cm.k, "paths have different horizons");
        std::copy(row.begin(), row.end(), cm.counts.begin() + static_cast<std::ptrdiff_t>(j * cm.k));
    }
    return cm;
}

}  // namespace taylorstaff
