#include "mpsim/clock.hpp"
#include "mpsim/engine.hpp"
#include "mpsim/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace mpsim;

TEST(Engine, TiesFireInInsertionOrder)
{
    Engine e;
    std::string log;
    e.schedule(SimTime{0}, "A", [&] { log += 'A'; });
    e.schedule(SimTime{0}, "B", [&] { log += 'B'; });
    e.run_until(SimTime{10});
    EXPECT_EQ(log, "AB");
}

TEST(Engine, EventFiresAtItsTime)
{
    Engine e;
    SimTime seen{};
    e.schedule(SimTime{100}, "X", [&] { seen = e.now(); });
    e.run_until(SimTime{1000});
    EXPECT_EQ(seen, SimTime{100});
}

TEST(Engine, SchedulingInThePastThrows)
{
    Engine e;
    e.schedule(SimTime{10}, "tick", [] {});
    e.run_until(SimTime{10});
    EXPECT_THROW(e.schedule(SimTime{5}, "Y", [] {}), SchedulingError);
}

TEST(Engine, RunUntilSummaries)
{
    Engine empty;
    auto s = empty.run_until(SimTime{1'000'000});
    EXPECT_EQ(s.events_processed, 0u);
    EXPECT_EQ(s.final_time, SimTime{1'000'000});

    Engine one;
    one.schedule(SimTime{5}, "e", [] {});
    s = one.run_until(SimTime{1'000'000});
    EXPECT_EQ(s.events_processed, 1u);
    EXPECT_EQ(s.final_time, SimTime{1'000'000});
}

TEST(Engine, EventsAfterEndStayQueued)
{
    Engine e;
    int fired = 0;
    e.schedule(SimTime{50}, "late", [&] { ++fired; });
    e.run_until(SimTime{49});
    EXPECT_EQ(fired, 0);
    EXPECT_EQ(e.pending(), 1u);
    e.run_until(SimTime{50});
    EXPECT_EQ(fired, 1);
}

TEST(Engine, EventsScheduledFromHandlersAreOrdered)
{
    Engine e;
    std::vector<int> order;
    e.schedule(SimTime{10}, "a", [&] {
        order.push_back(1);
        e.schedule(SimTime{10}, "c", [&] { order.push_back(3); });
    });
    e.schedule(SimTime{10}, "b", [&] { order.push_back(2); });
    e.run_until(SimTime{20});
    EXPECT_EQ(order, (std::vector<int>{1, 2, 3}));
}

TEST(Engine, RequestStopReturnsEarly)
{
    Engine e;
    int fired = 0;
    e.schedule(SimTime{1}, "stop", [&] {
        ++fired;
        e.request_stop();
    });
    e.schedule(SimTime{2}, "never", [&] { ++fired; });
    e.run_until(SimTime{100});
    EXPECT_EQ(fired, 1);
}

// Property: popped order equals a stable sort of the insertions by time.
TEST(EngineProperty, PopOrderMatchesReferenceSort)
{
    std::mt19937_64 gen(1234);
    for (int trial = 0; trial < 200; ++trial) {
        Engine e;
        std::vector<std::pair<std::uint64_t, int>> inserted;
        std::vector<int> popped;
        const int n = 1 + static_cast<int>(gen() % 60);
        for (int i = 0; i < n; ++i) {
            const std::uint64_t t = gen() % 8;
            inserted.emplace_back(t, i);
            e.schedule(SimTime{t}, "p", [&popped, i] { popped.push_back(i); });
        }
        std::stable_sort(inserted.begin(), inserted.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<int> expected;
        for (const auto& p : inserted)
            expected.push_back(p.second);
        e.run_until(SimTime{100});
        ASSERT_EQ(popped, expected);
    }
}

TEST(Engine, IdenticalRunsGiveIdenticalEventLogs)
{
    auto run = [] {
        Engine e;
        RngStreams rng(99);
        std::vector<std::pair<std::uint64_t, std::string>> log;
        e.set_observer([&](SimTime t, std::uint64_t, const std::string& l) { log.emplace_back(t.ticks, l); });
        std::function<void()> spawn = [&] {
            if (e.now().ticks < 5000)
                e.schedule_in(1 + rng.stream(1, RngPurpose::channel).below(100), "spawn", spawn);
        };
        e.schedule(SimTime{0}, "spawn", spawn);
        e.run_until(SimTime{10'000});
        return log;
    };
    EXPECT_EQ(run(), run());
}

TEST(Rng, StreamsAreIndependentOfCreationOrder)
{
    RngStreams a(7);
    RngStreams b(7);
    const auto x1 = a.stream(1, RngPurpose::channel).next_u64();
    const auto y1 = a.stream(2, RngPurpose::drift).next_u64();
    const auto y2 = b.stream(2, RngPurpose::drift).next_u64();
    const auto x2 = b.stream(1, RngPurpose::channel).next_u64();
    EXPECT_EQ(x1, x2);
    EXPECT_EQ(y1, y2);
    EXPECT_NE(x1, y1);
}

TEST(Rng, SeedsDifferAcrossNodesAndPurposes)
{
    std::set<std::uint64_t> seeds;
    for (int node = 0; node < 32; ++node)
        for (auto p : {RngPurpose::channel, RngPurpose::drift, RngPurpose::sync_jitter, RngPurpose::hop_sequence})
            seeds.insert(derive_stream_seed(42, static_cast<NodeId>(node), p));
    EXPECT_EQ(seeds.size(), 32u * 4u);
}

TEST(Rng, BelowIsInRangeAndRoughlyUniform)
{
    RngStream s(5);
    std::array<int, 7> counts{};
    const int n = 70'000;
    for (int i = 0; i < n; ++i) {
        const auto v = s.below(7);
        ASSERT_LT(v, 7u);
        ++counts[v];
    }
    const double p = 1.0 / 7.0;
    const double sigma = std::sqrt(n * p * (1 - p));
    for (int c : counts)
        EXPECT_NEAR(c, n * p, 4 * sigma);
}

TEST(Rng, Uniform01InHalfOpenUnitInterval)
{
    RngStream s(11);
    for (int i = 0; i < 100'000; ++i) {
        const double u = s.uniform01();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Clock, ZeroDriftIsIdentity)
{
    ClockSet c;
    c.add(1, 0.0);
    for (std::uint64_t t : {0ull, 1ull, 123456ull, 99'000'000ull})
        EXPECT_DOUBLE_EQ(c.local_time(1, SimTime{t}), static_cast<double>(t));
}

TEST(Clock, DriftExamples)
{
    ClockSet c;
    c.add(1, 40.0);
    c.add(2, -40.0, 10.0);
    EXPECT_DOUBLE_EQ(c.local_time(1, SimTime{1'000'000}), 1e6 * (1 + 40e-6));
    EXPECT_DOUBLE_EQ(c.local_time(2, SimTime{500'000}), 500'000.0 + 10.0 - 20.0);
}

TEST(Clock, UnknownNodeThrows)
{
    ClockSet c;
    EXPECT_THROW(c.local_time(3, SimTime{0}), UnknownNodeError);
}

TEST(Clock, DriftAboveLimitRejected)
{
    ClockSet c(40.0);
    EXPECT_THROW(c.add(1, 41.0), std::invalid_argument);
}

TEST(Clock, ResyncReanchors)
{
    ClockSet c;
    c.add(1, 20.0);
    c.resync(1, SimTime{1'000'000}, 3.0);
    EXPECT_DOUBLE_EQ(c.local_time(1, SimTime{1'000'000}), 1'000'003.0);
    EXPECT_DOUBLE_EQ(c.local_time(1, SimTime{1'500'000}), 1'500'000.0 + 3.0 + 20e-6 * 500'000);
}

TEST(ClockProperty, ErrorBoundedByOffsetPlusDrift)
{
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> drift(-40, 40), offset(-50, 50);
    for (int i = 0; i < 1000; ++i) {
        ClockSet c;
        const double d = drift(gen);
        const double o = offset(gen);
        c.add(1, d, o);
        const std::uint64_t horizon = gen() % 100'000'000;
        const double err = std::abs(c.local_time(1, SimTime{horizon}) - static_cast<double>(horizon));
        ASSERT_LE(err, std::abs(o) + std::abs(d) * 1e-6 * static_cast<double>(horizon) + 1e-6);
    }
}
