#pragma once

#include "mpsim/channel.hpp"
#include "mpsim/clock.hpp"
#include "mpsim/engine.hpp"
#include "mpsim/frame.hpp"
#include "mpsim/retx.hpp"
#include "mpsim/rng.hpp"
#include "mpsim/schedule.hpp"
#include "mpsim/trace.hpp"

#include <map>
#include <optional>
#include <span>
#include <vector>

namespace mpsim {

struct MacParams
{
    ScheduleParams schedule;
    PhyParams phy;
    std::uint32_t max_flood_waves = 2;
    double sync_jitter_us = 10.0;
    std::uint32_t desync_threshold = 3;
    double max_drift_ppm = 40.0;

    /// Largest clock error at which a node still hits its slots.
    double guard_us() const { return 0.5 * (schedule.slot_duration_us - phy.airtime_us()); }
};

struct SyncState
{
    NodeId node = 0;
    bool synced = false;
    std::uint32_t missed_beacons = 0;
    double last_correction_us = 0.0;
};

struct SyncReport
{
    /// Wave (1-based) in which each node first received the beacon.
    std::map<NodeId, std::uint32_t> received_wave;
    std::vector<NodeId> missed;
    std::vector<NodeId> desynced_now;
};

struct DownlinkPlan
{
    std::vector<Frame> commands;       // at most one per loop, matched by dst
    std::optional<Frame> broadcast;    // flooded in the retransmission slots
};

/// Upper layer seen by the MAC: plants produce feedback, the controller turns
/// feedback into commands, and receivers consume delivered frames.
class MacClient
{
public:
    virtual ~MacClient() = default;

    virtual void on_cycle_start(std::uint32_t cycle, SimTime now) = 0;
    /// Sampled at the start of the plant's uplink slot.
    virtual std::optional<Frame> sample_uplink(NodeId plant, std::uint32_t cycle, SimTime now) = 0;
    virtual DownlinkPlan compute(std::uint32_t cycle, std::span<const Frame> uplink, SimTime now) = 0;
    /// Called at the end of the delivering transmission.
    virtual void on_receive(NodeId receiver, const Frame& frame, std::uint32_t cycle, SimTime now) = 0;
};

/// TDMA network: one superframe per cycle with a flooded sync beacon,
/// feedback uplinks, the controller's compute slot, command downlinks and
/// shared retransmission floods. All timing is driven by the engine.
class MacNetwork
{
public:
    MacNetwork(Engine& engine, Channel& channel, RngStreams& rng, ClockSet& clocks, CycleSchedule schedule,
               std::vector<LoopSpec> loops, std::vector<NodeId> nodes, MacParams params, MacClient& client,
               Trace* trace);

    /// Draws clock drifts and schedules cycle 0 at `at`.
    void start(SimTime at = SimTime{});
    /// No cycle after the current one is scheduled.
    void stop() { stopping_ = true; }

    std::uint32_t cycle_length_us() const { return schedule_.cycle_length_us(); }
    const CycleSchedule& schedule() const { return schedule_; }
    const SyncState& sync_state(NodeId node) const;
    std::uint32_t current_cycle() const { return cycle_; }

    /// Every reception at `node` during the sync slots of cycles
    /// [from_cycle, from_cycle + cycles) fails.
    void force_beacon_loss(NodeId node, std::uint32_t from_cycle, std::uint32_t cycles);

    /// Floods the beacon of `cycle` in waves and updates every node's sync
    /// state and clock. Called from the sync slot of each cycle.
    SyncReport run_sync_beacon(std::uint32_t cycle);
    void on_beacon(NodeId node, std::uint32_t cycle, std::uint32_t wave, const Slot& slot);

    /// Synced and within the slot guard time.
    bool aligned(NodeId node, SimTime at) const;

private:
    struct Pending
    {
        Dissemination dissemination;
        std::optional<std::uint32_t> loop_id;
        std::set<NodeId> notified;
    };

    void begin_cycle(std::uint32_t cycle, SimTime start);
    void run_uplink(std::uint32_t cycle, const Slot& slot, SimTime at);
    void run_compute(std::uint32_t cycle, SimTime at);
    void run_downlink(std::uint32_t cycle, const Slot& slot, SimTime at);
    void run_retx(std::uint32_t cycle, const Slot& slot, std::uint32_t retx_number, SimTime at);
    void attempt(Pending& p, std::uint32_t cycle, const Slot& slot, std::uint32_t attempt_number, SimTime at);

    std::vector<NodeId> listeners(NodeId except, SimTime at) const;
    bool beacon_blocked(NodeId node, std::uint32_t cycle) const;
    void record(TraceRow row);

    Engine& engine_;
    Channel& channel_;
    RngStreams& rng_;
    ClockSet& clocks_;
    CycleSchedule schedule_;
    CycleSchedule current_;
    std::vector<LoopSpec> loops_;
    std::vector<NodeId> nodes_;
    MacParams params_;
    MacClient& client_;
    Trace* trace_;
    NodeId master_;

    std::map<NodeId, SyncState> sync_;
    std::map<NodeId, std::vector<std::pair<std::uint32_t, std::uint32_t>>> beacon_loss_;
    std::uint32_t cycle_ = 0;
    bool stopping_ = false;

    std::vector<Frame> uplink_received_;
    std::vector<Pending> pending_;
    std::optional<std::size_t> broadcast_index_;
};

}  // namespace mpsim
