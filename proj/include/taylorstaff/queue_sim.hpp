#pragma once

// FCFS n-server / infinite-server queues driven by arrival paths, with the
// replication (exceedance) and time-of-day delay estimators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "taylorstaff/arrivals.hpp"
#include "taylorstaff/errors.hpp"
#include "taylorstaff/rng.hpp"
#include "taylorstaff/service.hpp"

namespace taylorstaff {

// Piecewise-constant staffing n(t); levels[i] applies from starts[i]. period > 0 repeats the pattern.
struct StaffingProfile {
    std::vector<double> starts{0.0};
    std::vector<int> levels{1};
    double period = 0.0;

    static StaffingProfile constant(int n) { return {{0.0}, {n}, 0.0}; }

    void validate() const {
        require(!starts.empty() && starts.size() == levels.size(), "staffing profile needs matching starts and levels");
        require(starts.front() == 0.0, "staffing profile must start at time 0");
        for (std::size_t i = 1; i < starts.size(); ++i) require(starts[i] > starts[i - 1], "profile starts must increase");
        for (int n : levels) require(n >= 0, "staffing levels must be >= 0");
        require(period == 0.0 || period > starts.back(), "period must exceed the last segment start");
    }

    [[nodiscard]] double local(double t) const {
        if (period > 0.0) {
            double r = std::fmod(t, period);
            return r < 0.0 ? r + period : r;
        }
        return t;
    }

    [[nodiscard]] int at(double t) const {
        const double x = local(t);
        auto it = std::upper_bound(starts.begin(), starts.end(), x);
        return levels[static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - starts.begin()) - 1))];
    }

    // First time strictly after t at which the level may change.
    [[nodiscard]] double next_change(double t) const {
        if (starts.size() == 1) return std::numeric_limits<double>::infinity();
        const double x = local(t);
        auto it = std::upper_bound(starts.begin(), starts.end(), x);
        if (it != starts.end()) return t + (*it - x);
        if (period > 0.0) return t + (period - x);
        return std::numeric_limits<double>::infinity();
    }
};

struct Capacity {
    bool infinite = true;
    StaffingProfile profile;

    static Capacity infinite_servers() { return {}; }
    static Capacity servers(int n) {
        require(n >= 1, "number of servers must be >= 1");
        return {false, StaffingProfile::constant(n)};
    }
    static Capacity varying(StaffingProfile p) {
        p.validate();
        return {false, std::move(p)};
    }
};

struct QueuePath {
    std::vector<double> times{0.0};      // jump times; values[i] holds on [times[i], times[i+1])
    std::vector<std::int32_t> values{0};
    std::vector<std::uint8_t> delayed;   // per arrival, in arrival order
    double horizon = 0.0;
    bool infinite = true;

    [[nodiscard]] std::int32_t value_at(double t) const {
        auto it = std::upper_bound(times.begin(), times.end(), t);
        return values[static_cast<std::size_t>((it - times.begin()) - 1)];
    }

    // Values at sorted probe times.
    [[nodiscard]] std::vector<std::int32_t> sample(const std::vector<double>& probes) const {
        std::vector<std::int32_t> out(probes.size());
        std::size_t e = 0;
        for (std::size_t p = 0; p < probes.size(); ++p) {
            while (e + 1 < times.size() && times[e + 1] <= probes[p]) ++e;
            out[p] = values[e];
        }
        return out;
    }
};

// Event-driven FCFS simulation from an empty system. One service draw per customer at service start.
inline QueuePath simulate_queue(const ArrivalPath& arrivals, const ServiceDistSpec& service, const Capacity& capacity,
                                std::uint64_t seed) {
    service.validate();
    if (!capacity.infinite) capacity.profile.validate();
    const auto& a = arrivals.timestamps;
    for (std::size_t i = 1; i < a.size(); ++i) require(a[i] >= a[i - 1], "arrival timestamps must be sorted");

    ServiceSampler draw(service, seed);
    QueuePath q;
    q.horizon = arrivals.horizon;
    q.infinite = capacity.infinite;
    q.times.reserve(2 * a.size() + 1);
    q.values.reserve(2 * a.size() + 1);
    q.delayed.reserve(a.size());

    std::priority_queue<double, std::vector<double>, std::greater<>> departures;
    constexpr double inf = std::numeric_limits<double>::infinity();
    int cap = capacity.infinite ? std::numeric_limits<int>::max() : capacity.profile.at(0.0);
    double next_change = capacity.infinite ? inf : capacity.profile.next_change(0.0);
    std::size_t next_arrival = 0, next_start = 0;
    std::int32_t in_system = 0;

    auto start_waiting = [&](double t) {
        while (next_start < next_arrival && static_cast<std::int64_t>(departures.size()) < cap) {
            departures.push(t + draw());
            ++next_start;
        }
    };

    for (;;) {
        const double ta = next_arrival < a.size() ? a[next_arrival] : inf;
        const double td = departures.empty() ? inf : departures.top();
        const double t = std::min({ta, td, next_change});
        if (!(t <= q.horizon)) break;
        if (td <= ta && td <= next_change) {
            departures.pop();
            --in_system;
            q.times.push_back(t);
            q.values.push_back(in_system);
        } else if (ta <= next_change) {
            const bool busy = static_cast<std::int64_t>(departures.size()) >= cap || next_start < next_arrival;
            q.delayed.push_back(busy ? 1 : 0);
            ++next_arrival;
            ++in_system;
            q.times.push_back(t);
            q.values.push_back(in_system);
        } else {
            cap = capacity.profile.at(t);
            next_change = capacity.profile.next_change(t);
        }
        start_waiting(t);
    }
    return q;
}

inline QueuePath simulate_queue(const ArrivalPath& arrivals, const ServiceDistSpec& service, int servers,
                                std::uint64_t seed) {
    require(servers >= 1, "number of servers must be >= 1");
    return simulate_queue(arrivals, service, Capacity::servers(servers), seed);
}

// Fraction of arrivals in [from, horizon] that found all servers busy.
inline double delayed_fraction(const ArrivalPath& arrivals, const QueuePath& q, double from) {
    std::size_t n = 0, d = 0;
    for (std::size_t i = 0; i < q.delayed.size(); ++i) {
        if (arrivals.timestamps[i] < from) continue;
        ++n;
        d += q.delayed[i];
    }
    return n == 0 ? 0.0 : static_cast<double>(d) / static_cast<double>(n);
}

struct DelayEstimate {
    std::vector<double> probe_times;
    std::vector<double> probabilities;
    std::size_t replications = 0;

    [[nodiscard]] double average() const {
        if (probabilities.empty()) return 0.0;
        double s = 0.0;
        for (double p : probabilities) s += p;
        return s / static_cast<double>(probabilities.size());
    }
};

// Probes every `step` on [from, to].
inline std::vector<double> probe_grid(double from, double to, double step = 0.1) {
    require(step > 0.0 && to >= from, "invalid probe grid");
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) out.push_back(from + static_cast<double>(i) * step);
    return out;
}

// Threshold n at time t for the exceedance indicator Q(t) > n.
using ThresholdFn = std::function<double(double)>;

inline ThresholdFn constant_threshold(double n) {
    return [n](double) { return n; };
}
inline ThresholdFn profile_threshold(StaffingProfile p) {
    return [p = std::move(p)](double t) { return static_cast<double>(p.at(t)); };
}

// Replication estimator: per probe, fraction of replications with Q(t) > n(t).
inline DelayEstimate exceedance_prob(const std::vector<QueuePath>& paths, const ThresholdFn& threshold,
                                     const std::vector<double>& probes) {
    require(!paths.empty(), "no replications");
    for (const auto& q : paths)
        for (double t : probes) require(t <= q.horizon + 1e-9, "probe time beyond the path horizon");
    DelayEstimate out;
    out.probe_times = probes;
    out.probabilities.assign(probes.size(), 0.0);
    out.replications = paths.size();
    for (const auto& q : paths) {
        auto v = q.sample(probes);
        for (std::size_t p = 0; p < probes.size(); ++p)
            if (static_cast<double>(v[p]) > threshold(probes[p])) out.probabilities[p] += 1.0;
    }
    for (double& x : out.probabilities) x /= static_cast<double>(paths.size());
    return out;
}

inline DelayEstimate exceedance_prob(const std::vector<QueuePath>& paths, double threshold, double warmup,
                                     double probe_step = 0.1) {
    require(!paths.empty(), "no replications");
    require(paths.front().horizon >= warmup, "horizon shorter than the warm-up");
    return exceedance_prob(paths, constant_threshold(threshold), probe_grid(warmup, paths.front().horizon, probe_step));
}

// Replicated queue experiment that keeps only probe samples, not whole paths.
struct ReplicatedQueue {
    std::vector<double> probes;
    std::vector<std::vector<std::int32_t>> samples;  // replication x probe
    std::vector<double> delayed_fraction;            // per replication, arrivals after the first probe

    [[nodiscard]] DelayEstimate exceedance(const ThresholdFn& threshold) const {
        DelayEstimate out;
        out.probe_times = probes;
        out.probabilities.assign(probes.size(), 0.0);
        out.replications = samples.size();
        for (const auto& row : samples)
            for (std::size_t p = 0; p < probes.size(); ++p)
                if (static_cast<double>(row[p]) > threshold(probes[p])) out.probabilities[p] += 1.0;
        for (double& x : out.probabilities) x /= static_cast<double>(std::max<std::size_t>(1, samples.size()));
        return out;
    }
};

// make_arrivals(r) returns the arrival path of replication r; the service substream is derived from (seed, r).
template <class ArrivalFn>
ReplicatedQueue replicate_queue(ArrivalFn&& make_arrivals, const ServiceDistSpec& service, const Capacity& capacity,
                                const std::vector<double>& probes, std::size_t reps, std::uint64_t seed,
                                unsigned threads = 1) {
    ReplicatedQueue out;
    out.probes = probes;
    out.samples.resize(reps);
    out.delayed_fraction.resize(reps);
    const double from = probes.empty() ? 0.0 : probes.front();
    parallel_for(reps, threads, [&](std::size_t r) {
        ArrivalPath path = make_arrivals(r);
        for (double t : probes) require(t <= path.horizon + 1e-9, "probe time beyond the path horizon");
        QueuePath q = simulate_queue(path, service, capacity, derive_seed(seed, stream::service, r));
        out.samples[r] = q.sample(probes);
        out.delayed_fraction[r] = delayed_fraction(path, q, from);
    });
    return out;
}

// Time-of-day estimator on one long path of M cycles of length T: fraction over cycles of Q(T(j-1)+t) > n(t).
inline DelayEstimate delay_prob_timeofday(const QueuePath& path, const StaffingProfile& profile, double cycle,
                                          std::size_t cycles, const std::vector<double>& tod_probes) {
    require(cycle > 0.0 && cycles >= 1, "need a positive cycle length and at least one cycle");
    require(static_cast<double>(cycles) * cycle <= path.horizon + 1e-9, "M cycles exceed the path horizon");
    DelayEstimate out;
    out.probe_times = tod_probes;
    out.probabilities.assign(tod_probes.size(), 0.0);
    out.replications = cycles;
    for (double t : tod_probes) require(t >= 0.0 && t <= cycle, "time-of-day probe outside the cycle");
    for (std::size_t j = 0; j < cycles; ++j) {
        const double base = cycle * static_cast<double>(j);
        for (std::size_t p = 0; p < tod_probes.size(); ++p) {
            const double s = base + tod_probes[p];
            if (path.value_at(s) > profile.at(tod_probes[p])) out.probabilities[p] += 1.0;
        }
    }
    for (double& x : out.probabilities) x /= static_cast<double>(cycles);
    return out;
}

// Concatenates per-cycle paths into one stream with s = T (j - 1) + t.
inline ArrivalPath concatenate_cycles(const std::vector<ArrivalPath>& cycles, double cycle) {
    ArrivalPath out;
    out.horizon = cycle * static_cast<double>(cycles.size());
    out.model = cycles.empty() ? "" : cycles.front().model;
    for (std::size_t j = 0; j < cycles.size(); ++j)
        for (double t : cycles[j].timestamps) out.timestamps.push_back(cycle * static_cast<double>(j) + t);
    return out;
}

}  // namespace taylorstaff
