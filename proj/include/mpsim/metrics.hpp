#pragma once

#include "mpsim/kinematics.hpp"
#include "mpsim/trace.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace mpsim {

struct ScenarioConfig;

/// Closed-loop latency: plant application time minus the sampling time of
/// the feedback that informed the command.
struct LatencyStats
{
    std::uint64_t decisions = 0;  // radio commands issued
    std::uint64_t count = 0;      // commands applied over the radio
    double min_us = 0.0;
    double mean_us = 0.0;
    double p99_us = 0.0;
    double max_us = 0.0;
    std::vector<std::pair<double, double>> cdf;   // (value_us, fraction), sorted
    std::map<std::int64_t, std::uint64_t> histogram;  // value_us -> count
    std::uint32_t cycle_length_us = 0;

    bool empty() const { return count == 0; }
};

LatencyStats cycle_time_metric(const Trace& trace);

struct CrossTrack
{
    std::vector<std::pair<SimTime, double>> series;  // time, error m
    double rms_m = 0.0;
    double max_m = 0.0;
};

/// Distance from a point to the nearest point of a polyline (a single point
/// counts as a degenerate polyline).
double distance_to_polyline(const Point& p, std::span<const Point> polyline);

/// Ground-truth POSE rows of `robot` at or after `from` against `polyline`.
CrossTrack cross_track_metric(const Trace& trace, NodeId robot, std::span<const Point> polyline,
                              SimTime from = SimTime{});

/// Ground-truth positions of a robot in trace order.
std::vector<Point> traced_path(const Trace& trace, NodeId robot);

struct DeliveryStats
{
    std::uint64_t attempted = 0;
    std::uint64_t delivered = 0;
    double ratio() const { return attempted == 0 ? 1.0 : static_cast<double>(delivered) / attempted; }
};

struct RobotMetrics
{
    NodeId robot = 0;
    CrossTrack cross_track;
    std::optional<double> completion_time_s;
};

struct FollowerMetrics
{
    NodeId follower = 0;
    NodeId leader = 0;
    std::optional<SimTime> converged_at;
    CrossTrack deviation;  // against the leader's traced path
    double min_gap_m = 0.0;
    std::optional<SimTime> min_gap_at;
};

struct EstopMetrics
{
    SimTime trigger;                 // first cycle a robot truly sees the obstacle below threshold
    std::uint32_t trigger_cycle = 0;
    std::optional<std::uint32_t> latch_cycle;
    std::optional<SimTime> stationary_at;
    std::optional<double> latency_us;  // trigger to all robots stationary
    double speed_at_trigger_mms = 0.0;
    std::map<NodeId, std::uint32_t> apply_cycle;  // first ESTOP_APPLY per robot
};

struct MetricsReport
{
    std::string scenario;
    std::uint64_t seed = 0;
    double duration_s = 0.0;
    std::uint32_t cycles = 0;
    LatencyStats latency;
    DeliveryStats command_delivery;
    DeliveryStats feedback_delivery;
    std::vector<RobotMetrics> robots;
    std::optional<FollowerMetrics> follower;
    std::optional<EstopMetrics> estop;
    bool all_complete = false;
};

MetricsReport compute_metrics(const Trace& trace, const ScenarioConfig& config);

nlohmann::json to_json(const LatencyStats& s);
nlohmann::json to_json(const MetricsReport& m);

}  // namespace mpsim
