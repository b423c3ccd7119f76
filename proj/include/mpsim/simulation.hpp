#pragma once

#include "mpsim/channel.hpp"
#include "mpsim/clock.hpp"
#include "mpsim/controller.hpp"
#include "mpsim/engine.hpp"
#include "mpsim/mac.hpp"
#include "mpsim/metrics.hpp"
#include "mpsim/rng.hpp"
#include "mpsim/robot.hpp"
#include "mpsim/scenario.hpp"
#include "mpsim/trace.hpp"

#include <map>
#include <memory>

namespace mpsim {

/// One co-simulation run: plants, radio network and path controller wired
/// together from a validated scenario.
class Simulation final : public MacClient
{
public:
    explicit Simulation(ScenarioConfig config);

    /// Runs until every robot finished (or the estop stopped them) and all
    /// robots are stationary, or until max_duration_s.
    void run();

    const ScenarioConfig& config() const { return config_; }
    const Trace& trace() const { return trace_; }
    Trace take_trace() { return std::move(trace_); }
    const Robot& robot(NodeId id) const { return robots_.at(id); }
    const PathController& controller() const { return controller_; }
    const MacNetwork& mac() const { return *mac_; }
    bool finished() const { return finished_; }

    void on_cycle_start(std::uint32_t cycle, SimTime now) override;
    std::optional<Frame> sample_uplink(NodeId plant, std::uint32_t cycle, SimTime now) override;
    DownlinkPlan compute(std::uint32_t cycle, std::span<const Frame> uplink, SimTime now) override;
    void on_receive(NodeId receiver, const Frame& frame, std::uint32_t cycle, SimTime now) override;

private:
    std::uint16_t sense(const Robot& r, SimTime now) const;
    void apply(Robot& r, const Frame& frame, std::uint32_t cycle, SimTime now, bool local);
    void record(TraceRow row) { trace_.append(row); }

    ScenarioConfig config_;
    Engine engine_;
    RngStreams rng_;
    ClockSet clocks_;
    Channel channel_;
    CycleSchedule schedule_;
    std::map<NodeId, Robot> robots_;
    PathController controller_;
    Trace trace_;
    std::unique_ptr<MacNetwork> mac_;

    NodeId controller_node_;
    std::optional<NodeId> hosted_;
    std::map<NodeId, std::uint16_t> fb_seq_;
    SimTime cycle_start_;
    double dt_s_ = 0.0;
    bool finished_ = false;
};

struct RunResult
{
    Trace trace;
    MetricsReport metrics;
};

/// Validates, simulates and measures one scenario. Throws ConfigError before
/// anything runs if the config is invalid.
RunResult run_scenario(const ScenarioConfig& config);

}  // namespace mpsim
