#include "mpsim/mac.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

using namespace mpsim;

namespace {

/// Plants report a counter, the controller echoes a command to every plant.
class EchoClient : public MacClient
{
public:
    void on_cycle_start(std::uint32_t, SimTime) override {}
    std::optional<Frame> sample_uplink(NodeId plant, std::uint32_t, SimTime) override
    {
        return make_feedback(plant, 0, seq_[plant]++, 1, 2, kNoDistanceReading);
    }
    DownlinkPlan compute(std::uint32_t, std::span<const Frame> uplink, SimTime) override
    {
        uplinks += uplink.size();
        DownlinkPlan p;
        for (NodeId n : plants)
            p.commands.push_back(make_command(0, n, cmd_seq_++, 10, 10));
        if (broadcast)
            p.broadcast = make_estop(0, estop_seq_++);
        return p;
    }
    void on_receive(NodeId receiver, const Frame& f, std::uint32_t, SimTime now) override
    {
        received.emplace_back(receiver, f, now);
    }

    std::vector<NodeId> plants;
    bool broadcast = false;
    std::size_t uplinks = 0;
    std::vector<std::tuple<NodeId, Frame, SimTime>> received;

    std::vector<std::tuple<NodeId, Frame, SimTime>> received_by_plants() const
    {
        std::vector<std::tuple<NodeId, Frame, SimTime>> out;
        for (const auto& r : received)
            if (std::get<0>(r) != 0)
                out.push_back(r);
        return out;
    }

private:
    std::map<NodeId, std::uint16_t> seq_;
    std::uint16_t cmd_seq_ = 0;
    std::uint16_t estop_seq_ = 0;
};

struct Net
{
    explicit Net(int robots, double per = 0.0, std::uint64_t seed = 1, std::uint32_t waves = 2)
        : rng(seed), channel(16, rng)
    {
        std::vector<NodeId> nodes{0};
        std::vector<LoopSpec> loops;
        for (int i = 1; i <= robots; ++i) {
            nodes.push_back(static_cast<NodeId>(i));
            loops.push_back(LoopSpec{static_cast<std::uint32_t>(i), 0, static_cast<NodeId>(i), {}});
            client.plants.push_back(static_cast<NodeId>(i));
        }
        for (NodeId a : nodes)
            for (NodeId b : nodes)
                if (a != b)
                    channel.add_link(RadioLinkModel{a, b, std::vector<double>(16, per), std::nullopt});
        params.max_flood_waves = waves;
        auto sched = build_schedule(loops, params.schedule, make_hop_sequence(8, rng.stream(0, RngPurpose::hop_sequence)));
        mac = std::make_unique<MacNetwork>(engine, channel, rng, clocks, sched, loops, nodes, params, client, &trace);
    }

    void run_cycles(std::uint32_t n)
    {
        mac->start();
        engine.run_until(SimTime{static_cast<std::uint64_t>(n) * mac->cycle_length_us() - 1});
    }

    std::size_t count(TraceKind k, std::optional<NodeId> node = {}) const
    {
        return static_cast<std::size_t>(std::count_if(trace.rows().begin(), trace.rows().end(), [&](const TraceRow& r) {
            return r.kind == k && (!node || r.node == *node);
        }));
    }

    Engine engine;
    RngStreams rng;
    ClockSet clocks;
    Channel channel;
    MacParams params;
    EchoClient client;
    Trace trace;
    std::unique_ptr<MacNetwork> mac;
};

}  // namespace

TEST(Mac, PerfectLinksSyncEveryNodeWithBoundedResidual)
{
    Net net(3, 0.0, 1, 1);
    net.run_cycles(50);
    for (NodeId n : {1, 2, 3}) {
        EXPECT_TRUE(net.mac->sync_state(n).synced);
        EXPECT_EQ(net.mac->sync_state(n).missed_beacons, 0u);
    }
    std::size_t rx = 0;
    for (const TraceRow& r : net.trace.rows()) {
        if (r.kind != TraceKind::sync_rx)
            continue;
        ++rx;
        EXPECT_EQ(r.f[0], 1.0);
        EXPECT_LE(std::abs(r.f[1]), net.params.sync_jitter_us);
    }
    EXPECT_EQ(rx, 3u * 50u);
}

TEST(Mac, LosslessCycleDeliversEverything)
{
    Net net(2);
    net.run_cycles(10);
    EXPECT_EQ(net.client.uplinks, 20u);
    // 20 feedback frames at the controller, 20 commands at the plants.
    EXPECT_EQ(net.client.received.size(), 40u);
    EXPECT_EQ(net.client.received_by_plants().size(), 20u);
    EXPECT_EQ(net.count(TraceKind::cycle), 10u);
    // One primary CMD per loop; retx slots idle when everything arrived.
    for (const TraceRow& r : net.trace.rows())
        if (r.kind == TraceKind::tx && r.f[0] == static_cast<double>(MsgType::command))
            EXPECT_EQ(r.f[1], 1.0);
}

TEST(Mac, CommandArrivesOneAirtimeAfterItsSlot)
{
    Net net(1);
    net.run_cycles(3);
    const auto commands = net.client.received_by_plants();
    ASSERT_EQ(commands.size(), 3u);
    for (std::size_t c = 0; c < 3; ++c) {
        const auto& [node, frame, at] = commands[c];
        EXPECT_EQ(node, 1);
        EXPECT_EQ(at.ticks, c * 2000 + 1250 + 104);
    }
}

TEST(Mac, MissedBeaconsDesyncAndSilenceTheNode)
{
    Net net(2);
    net.mac->force_beacon_loss(1, 5, 3);
    net.run_cycles(12);

    std::optional<SimTime> desync_at;
    std::optional<SimTime> resync_at;
    for (const TraceRow& r : net.trace.rows()) {
        if (r.node != 1)
            continue;
        if (r.kind == TraceKind::desync)
            desync_at = r.time;
        if (r.kind == TraceKind::sync_rx && desync_at && !resync_at)
            resync_at = r.time;
        if (desync_at && !resync_at)
            EXPECT_NE(r.kind, TraceKind::tx) << "desynced node transmitted at " << r.time.ticks;
    }
    ASSERT_TRUE(desync_at.has_value());
    const std::uint64_t cycle = net.mac->cycle_length_us();
    EXPECT_EQ(cycle, 2500u);
    EXPECT_EQ(desync_at->ticks, 7u * cycle);  // third consecutive miss: cycles 5, 6, 7
    ASSERT_TRUE(resync_at.has_value());
    EXPECT_EQ(resync_at->ticks, 8u * cycle);
    EXPECT_TRUE(net.mac->sync_state(1).synced);
    EXPECT_EQ(net.mac->sync_state(1).missed_beacons, 0u);
}

TEST(Mac, TwoMissesDoNotDesync)
{
    Net net(1);
    net.mac->force_beacon_loss(1, 2, 2);
    net.run_cycles(6);
    EXPECT_EQ(net.count(TraceKind::desync), 0u);
    EXPECT_EQ(net.count(TraceKind::sync_miss, 1), 2u);
}

TEST(Mac, DesyncedPlantMissesItsCommandsAndFeedback)
{
    Net net(1);
    net.mac->force_beacon_loss(1, 0, 4);
    net.run_cycles(4);
    // Never synced before the loss window ends, so nothing flows either way.
    EXPECT_EQ(net.client.received.size(), 0u);
    EXPECT_EQ(net.client.uplinks, 0u);
}

TEST(MacProperty, DesyncedNodesNeverTransmit)
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Net net(3, 0.55, seed);
        net.run_cycles(400);
        std::map<NodeId, bool> synced;
        std::size_t desyncs = 0;
        for (const TraceRow& r : net.trace.rows()) {
            if (r.kind == TraceKind::desync) {
                synced[r.node] = false;
                ++desyncs;
            }
            if (r.kind == TraceKind::sync_rx)
                synced[r.node] = true;
            if ((r.kind == TraceKind::tx || r.kind == TraceKind::sync_tx) && r.node != 0) {
                auto it = synced.find(r.node);
                ASSERT_TRUE(it != synced.end() && it->second)
                    << "seed " << seed << " node " << int{r.node} << " at " << r.time.ticks;
            }
        }
        EXPECT_GT(desyncs, 0u) << "loss too low to exercise desync";
    }
}

TEST(Mac, BroadcastUsesRetxSlots)
{
    Net net(2);
    net.client.broadcast = true;
    net.run_cycles(1);
    std::size_t estops = 0;
    for (const auto& [node, frame, at] : net.client.received)
        if (frame.type() == MsgType::estop) {
            ++estops;
            EXPECT_EQ(at.ticks, 2000u + 104u);  // first retx slot of a 2-loop cycle
        }
    EXPECT_EQ(estops, 2u);
}

TEST(Mac, TraceTimeIsMonotone)
{
    Net net(2, 0.3, 9);
    net.run_cycles(100);
    for (std::size_t i = 1; i < net.trace.size(); ++i)
        ASSERT_LE(net.trace.rows()[i - 1].time, net.trace.rows()[i].time);
}

TEST(Mac, GuardTimeFromSlotAndAirtime)
{
    MacParams p;
    EXPECT_DOUBLE_EQ(p.guard_us(), (250.0 - 104.0) / 2.0);
}
