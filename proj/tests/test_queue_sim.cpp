#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "taylorstaff/queue_sim.hpp"

using namespace taylorstaff;

namespace {

// Erlang C: P(wait) in M/M/n with offered load a = lambda / mu.
double erlang_c(int n, double a) {
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < n; ++k) {
        term *= a / k;
        sum += term;
    }
    const double last = term * a / n * n / (n - a);
    return last / (sum + last);
}

ArrivalPath manual_path(std::vector<double> ts, double horizon) {
    ArrivalPath p;
    p.timestamps = std::move(ts);
    p.horizon = horizon;
    return p;
}

// Near-deterministic unit service.
const ServiceDistSpec kUnit = ServiceDistSpec::gamma(1.0, 1e-6);

void expect_path(const QueuePath& q, const std::vector<double>& times, const std::vector<int>& values) {
    ASSERT_EQ(q.times.size(), times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        EXPECT_NEAR(q.times[i], times[i], 1e-4) << "event " << i;
        EXPECT_EQ(q.values[i], values[i]) << "event " << i;
    }
}

}  // namespace

TEST(QueueSim, ErlangCOracle) {
    EXPECT_NEAR(erlang_c(1, 0.5), 0.5, 1e-12);
    EXPECT_NEAR(erlang_c(2, 1.0), 1.0 / 3.0, 1e-12);
}

TEST(QueueSim, MarkovianQueueMatchesErlangC) {
    const int n = 24;
    const double lam = 20.0;
    const auto svc = ServiceDistSpec::exponential(1.0);
    auto rq = replicate_queue([&](std::size_t r) { return generate(ArrivalModelSpec::m1(lam), 400.0, derive_seed(5, 1, r)); },
                              svc, Capacity::servers(n), probe_grid(20.0, 400.0, 1.0), 30, 5);
    const double c = erlang_c(n, lam);
    EXPECT_NEAR(rq.exceedance(constant_threshold(n - 1)).average(), c, 0.02);
    double delayed = 0.0;
    for (double f : rq.delayed_fraction) delayed += f;
    EXPECT_NEAR(delayed / 30.0, c, 0.02);
}

TEST(QueueSim, InfiniteServerOccupancyIsPoisson) {
    const double lam = 60.0;
    const auto svc = ServiceDistSpec::lognormal(0.5, 0.5);
    auto rq = replicate_queue([&](std::size_t r) { return generate(ArrivalModelSpec::m1(lam), 60.0, derive_seed(8, 1, r)); },
                              svc, Capacity::infinite_servers(), probe_grid(10.0, 60.0, 5.0), 300, 8);
    double s = 0.0, ss = 0.0, n = 0.0;
    for (const auto& row : rq.samples)
        for (auto v : row) {
            s += v;
            ss += static_cast<double>(v) * v;
            n += 1.0;
        }
    const double mean = s / n, var = ss / n - mean * mean;
    EXPECT_NEAR(mean, 30.0, 0.4);
    EXPECT_NEAR(var, 30.0, 2.5);
    for (double f : rq.delayed_fraction) EXPECT_EQ(f, 0.0);
}

TEST(QueueSim, PathInvariants) {
    const auto arrivals = generate(ArrivalModelSpec::m5({50.0, 0.1, 0.5, 0.5}), 20.0, 3);
    const int n = 8;
    const auto q = simulate_queue(arrivals, ServiceDistSpec::lognormal(1.0 / 6.0, 1.0 / 6.0), n, 4);
    ASSERT_EQ(q.delayed.size(), arrivals.timestamps.size());
    EXPECT_EQ(q.values.front(), 0);
    std::size_t a = 0;
    for (std::size_t i = 1; i < q.times.size(); ++i) {
        ASSERT_GE(q.times[i], q.times[i - 1]);
        ASSERT_GE(q.values[i], 0);
        ASSERT_EQ(std::abs(q.values[i] - q.values[i - 1]), 1);
        if (q.values[i] > q.values[i - 1]) {
            // Under FCFS with fixed n an arrival waits iff it finds n or more in the system.
            ASSERT_EQ(q.delayed[a], q.values[i - 1] >= n ? 1 : 0) << "arrival " << a;
            ++a;
        }
    }
    EXPECT_EQ(a, arrivals.timestamps.size());
}

TEST(QueueSim, SingleServerHandExample) {
    const auto q = simulate_queue(manual_path({0.5, 1.0, 1.2, 4.0}, 6.0), kUnit, 1, 1);
    expect_path(q, {0.0, 0.5, 1.0, 1.2, 1.5, 2.5, 3.5, 4.0, 5.0}, {0, 1, 2, 3, 2, 1, 0, 1, 0});
    EXPECT_EQ(q.delayed, (std::vector<std::uint8_t>{0, 1, 1, 0}));
    EXPECT_EQ(q.value_at(1.3), 3);
    EXPECT_EQ(q.value_at(1.0), 2);
    EXPECT_EQ(q.sample({0.0, 2.0, 5.5}), (std::vector<std::int32_t>{0, 2, 0}));
}

TEST(QueueSim, CapacityDropDoesNotPreempt) {
    StaffingProfile p{{0.0, 1.0}, {2, 1}, 0.0};
    const auto q = simulate_queue(manual_path({0.1, 0.2, 1.5}, 5.0), ServiceDistSpec::gamma(2.0, 1e-6),
                                  Capacity::varying(p), 1);
    expect_path(q, {0.0, 0.1, 0.2, 1.5, 2.1, 2.2, 4.2}, {0, 1, 2, 3, 2, 1, 0});
    EXPECT_EQ(q.delayed, (std::vector<std::uint8_t>{0, 0, 1}));
}

TEST(QueueSim, CapacityIncreaseStartsWaitingCustomers) {
    StaffingProfile p{{0.0, 1.0}, {0, 2}, 0.0};
    const auto q = simulate_queue(manual_path({0.2, 0.4}, 3.0), kUnit, Capacity::varying(p), 1);
    expect_path(q, {0.0, 0.2, 0.4, 2.0, 2.0}, {0, 1, 2, 1, 0});
    EXPECT_EQ(q.delayed, (std::vector<std::uint8_t>{1, 1}));
}

TEST(QueueSim, ZeroStaffingDelaysEveryone) {
    const auto arrivals = generate(ArrivalModelSpec::m1(30.0), 2.0, 7);
    const auto q = simulate_queue(arrivals, kUnit, Capacity::varying(StaffingProfile::constant(0)), 1);
    EXPECT_EQ(q.values.back(), static_cast<std::int32_t>(arrivals.timestamps.size()));
    for (auto d : q.delayed) EXPECT_EQ(d, 1);
    const auto est = exceedance_prob({q}, constant_threshold(0), {1.5, 2.0});
    EXPECT_DOUBLE_EQ(est.average(), 1.0);
}

TEST(QueueSim, PeriodicProfileLookup) {
    StaffingProfile p{{0.0, 2.0, 5.0}, {3, 7, 4}, 8.0};
    EXPECT_EQ(p.at(0.0), 3);
    EXPECT_EQ(p.at(2.0), 7);
    EXPECT_EQ(p.at(6.0), 4);
    EXPECT_EQ(p.at(9.0), 3);
    EXPECT_EQ(p.at(10.5), 7);
    EXPECT_DOUBLE_EQ(p.next_change(6.0), 8.0);
    EXPECT_DOUBLE_EQ(p.next_change(8.5), 10.0);
    EXPECT_THROW((StaffingProfile{{0.0, 2.0}, {3, -1}, 0.0}.validate()), ValidationError);
    EXPECT_THROW((StaffingProfile{{1.0}, {3}, 0.0}.validate()), ValidationError);
    EXPECT_THROW((StaffingProfile{{0.0, 2.0}, {3, 4}, 2.0}.validate()), ValidationError);
}

TEST(QueueSim, ProbeValidation) {
    const auto q = simulate_queue(manual_path({0.5}, 2.0), kUnit, 1, 1);
    EXPECT_THROW(exceedance_prob({q}, constant_threshold(0), {2.5}), ValidationError);
    EXPECT_THROW(exceedance_prob({q}, 0.0, 3.0), ValidationError);
    EXPECT_THROW(exceedance_prob(std::vector<QueuePath>{}, constant_threshold(0), {1.0}), ValidationError);
    EXPECT_THROW(probe_grid(1.0, 0.0), ValidationError);
    EXPECT_THROW(probe_grid(0.0, 1.0, 0.0), ValidationError);
    EXPECT_EQ(probe_grid(24.0, 48.0, 0.1).size(), 241u);
    EXPECT_THROW(Capacity::servers(0), ValidationError);
}

TEST(QueueSim, UnsortedArrivalsAreRejected) {
    EXPECT_THROW(simulate_queue(manual_path({1.0, 0.5}, 2.0), kUnit, 1, 1), ValidationError);
}

TEST(QueueSim, ReplicationsDoNotDependOnThreadCount) {
    auto make = [](std::size_t r) { return generate(ArrivalModelSpec::m5({40.0, 0.1, 0.5, 0.5}), 6.0, derive_seed(2, 1, r)); };
    const auto svc = ServiceDistSpec::exponential(6.0);
    const auto probes = probe_grid(1.0, 6.0, 0.5);
    const auto a = replicate_queue(make, svc, Capacity::servers(8), probes, 12, 77, 1);
    const auto b = replicate_queue(make, svc, Capacity::servers(8), probes, 12, 77, 3);
    EXPECT_EQ(a.samples, b.samples);
    EXPECT_EQ(a.delayed_fraction, b.delayed_fraction);
}

TEST(QueueSim, TimeOfDayEstimatorOnConcatenatedCycles) {
    const auto joined = concatenate_cycles({manual_path({0.5}, 2.0), manual_path({}, 2.0), manual_path({0.5, 0.6}, 2.0)}, 2.0);
    EXPECT_DOUBLE_EQ(joined.horizon, 6.0);
    EXPECT_EQ(joined.timestamps, (std::vector<double>{0.5, 4.5, 4.6}));
    const auto q = simulate_queue(joined, kUnit, Capacity::infinite_servers(), 1);
    const auto est = delay_prob_timeofday(q, StaffingProfile::constant(0), 2.0, 3, {0.7, 1.8});
    EXPECT_NEAR(est.probabilities[0], 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(est.probabilities[1], 0.0, 1e-12);
    EXPECT_THROW(delay_prob_timeofday(q, StaffingProfile::constant(0), 2.0, 4, {0.7}), ValidationError);
    EXPECT_THROW(delay_prob_timeofday(q, StaffingProfile::constant(0), 2.0, 3, {2.5}), ValidationError);
}
