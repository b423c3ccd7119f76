#pragma once

#include "mpsim/frame.hpp"
#include "mpsim/kinematics.hpp"
#include "mpsim/robot.hpp"
#include "mpsim/sim_time.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace mpsim {

struct ReferencePath
{
    std::vector<Point> points;
    double tolerance_m = 0.02;
};

enum class CurveModel : std::uint8_t
{
    parabola,      // y = a x^2 tangent to the heading: kappa = 2 y / x^2
    circular_arc,  // kappa = 2 y / (x^2 + y^2)
};

/// What happens when the requested curvature exceeds kappa_max.
enum class CurvatureLimit : std::uint8_t
{
    rotate_in_place,
    clamp,
};

struct ControllerParams
{
    double v_nom_mms = 100.0;
    double k_slow = 1.0;  // 1/s; v <= k_slow * distance
    double x_min_m = 0.02;
    double kappa_max = 1.0;  // 1/m
    CurvatureLimit curvature_limit = CurvatureLimit::rotate_in_place;
    CurveModel curve = CurveModel::parabola;
    double omega_turn = 1.0;  // rad/s for in-place rotation
    double tolerance_m = 0.02;
    std::uint16_t estop_threshold_mm = 150;
    double follower_min_spacing_m = 0.05;
    double follower_standoff_m = 0.25;
};

/// Integrates encoder increments through the exact-arc model.
Pose dead_reckon(const Pose& estimate, std::int32_t delta_left_ticks, std::int32_t delta_right_ticks,
                 const RobotParams& robot);

/// Wrap-safe difference of two cumulative 32-bit tick counters.
inline std::int32_t tick_delta(std::int32_t now, std::int32_t before)
{
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(now) - static_cast<std::uint32_t>(before));
}

struct Deviation
{
    double distance_m = 0.0;
    double bearing_rad = 0.0;
};

Deviation deviation_error(const Pose& estimate, const Point& target);

/// Target expressed in the robot frame (x forward, y left).
Point to_robot_frame(const Pose& pose, const Point& target);

/// Curvature the configured curve model asks for; nullopt when the target is
/// not ahead (x <= x_min).
std::optional<double> requested_curvature(const Point& target_in_robot_frame, const ControllerParams& params);

/// Wheel speeds in mm/s steering toward `target`. Falls back to rotation in
/// place when the target is beside or behind the robot, or when the curve
/// is tighter than kappa_max under CurvatureLimit::rotate_in_place. Wheels
/// above the robot's maximum are scaled down together, keeping kappa.
/// Speed tapers with `taper_distance_m`, by default the distance to target.
WheelPair quadratic_curve_speeds(const Pose& estimate, const Point& target, double v_nom_mms,
                                 const ControllerParams& params, const RobotParams& robot,
                                 std::optional<double> taper_distance_m = std::nullopt);

enum class ReferenceStatus : std::uint8_t
{
    tracking,
    complete,
};

/// Skips every reference point already within tolerance.
ReferenceStatus advance_reference(std::size_t& index, const Pose& estimate, const ReferencePath& path);

/// Reference points for the follower, generated from the leader's pose.
class FollowerQueue
{
public:
    FollowerQueue(double min_spacing_m, double standoff_m) : min_spacing_(min_spacing_m), standoff_(standoff_m) {}

    /// Appends the leader position if it moved at least min_spacing from the
    /// last appended point. Returns true if a point was appended.
    bool update(const Pose& leader);

    bool empty() const { return points_.empty(); }
    const Point& front() const { return points_.front(); }
    void pop() { points_.pop_front(); }
    std::size_t size() const { return points_.size(); }
    const std::deque<Point>& points() const { return points_; }

    double min_spacing() const { return min_spacing_; }
    double standoff() const { return standoff_; }

private:
    double min_spacing_;
    double standoff_;
    std::deque<Point> points_;
    std::optional<Point> last_appended_;
};

/// True if any reading is below the threshold (0xFFFF means no reading).
bool estop_decision(std::span<const std::uint16_t> distances_mm, std::uint16_t threshold_mm);

/// Encoder/distance sample that reached the controller this cycle.
struct FeedbackSample
{
    NodeId robot = 0;
    std::int32_t left_ticks = 0;
    std::int32_t right_ticks = 0;
    std::uint16_t distance_mm = kNoDistanceReading;
    SimTime sampled_at;
};

struct CommandDecision
{
    NodeId robot = 0;
    Frame frame;
    WheelPair speeds;
    Pose estimate;
    std::size_t reference_index = 0;
    bool complete = false;
    std::optional<SimTime> informing_sample;
};

struct ControllerOutput
{
    std::vector<CommandDecision> commands;
    std::optional<Frame> estop_broadcast;
    /// Set on the cycle the estop latches.
    std::optional<NodeId> estop_trigger;
    std::uint16_t estop_trigger_distance_mm = kNoDistanceReading;
    /// Robots whose path completed this cycle.
    std::vector<NodeId> newly_complete;
};

/// Path controller for one scenario: dead reckoning, reference advancement,
/// quadratic-curve steering, follower reference generation and the estop
/// latch. Robots are processed path-followers first, then followers, each
/// group in id order.
class PathController
{
public:
    PathController(NodeId self, ControllerParams params);

    NodeId id() const { return self_; }
    const ControllerParams& params() const { return params_; }

    void add_path_robot(NodeId robot, const RobotParams& params, const Pose& initial, ReferencePath path);
    void add_follower(NodeId robot, const RobotParams& params, const Pose& initial, NodeId leader);

    /// One control cycle. Missing feedback holds the previous estimate; a
    /// command is still emitted for every robot.
    ControllerOutput controller_cycle(std::span<const FeedbackSample> received);

    bool estop_latched() const { return estop_latched_; }
    bool all_complete() const;
    bool complete(NodeId robot) const;
    const Pose& estimate(NodeId robot) const;
    std::size_t reference_index(NodeId robot) const;
    const FollowerQueue* follower_queue(NodeId robot) const;
    std::vector<NodeId> robots() const;

private:
    struct Track
    {
        NodeId robot = 0;
        RobotParams params;
        Pose estimate;
        std::int32_t last_left = 0;
        std::int32_t last_right = 0;
        std::optional<SimTime> last_sample;
        std::uint16_t last_distance = kNoDistanceReading;
        std::uint16_t seq = 0;
        std::size_t index = 0;
        bool complete = false;
        std::optional<ReferencePath> path;
        std::optional<NodeId> leader;
        std::optional<FollowerQueue> queue;
    };

    void ingest(Track& t, const FeedbackSample& fb);
    WheelPair steer_path(Track& t, bool& just_completed);
    WheelPair steer_follower(Track& t, bool& just_completed);
    Track& track(NodeId robot);
    const Track& track(NodeId robot) const;

    NodeId self_;
    ControllerParams params_;
    std::map<NodeId, Track> tracks_;
    bool estop_latched_ = false;
    std::uint16_t estop_seq_ = 0;
};

}  // namespace mpsim
