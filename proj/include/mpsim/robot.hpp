#pragma once

#include "mpsim/frame.hpp"
#include "mpsim/kinematics.hpp"
#include "mpsim/sim_time.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mpsim {

/// Small differential-drive robot. Defaults are plausible values for a
/// hobby-class two-wheel platform, not measured constants.
struct RobotParams
{
    double wheel_radius_m = 0.0325;
    double track_width_m = 0.117;
    std::uint32_t ticks_per_rev = 360;
    std::uint32_t max_wheel_speed_mms = 300;
    double actuation_rate_limit_mms2 = 500.0;
    std::uint32_t sensor_max_range_mm = 2000;

    /// Throws std::invalid_argument unless every field is strictly positive.
    void validate() const;

    /// Wheel arc length of one encoder tick.
    double tick_quantum_m() const;
};

struct WheelPair
{
    double left = 0.0;
    double right = 0.0;
    bool operator==(const WheelPair&) const = default;
};

struct WheelState
{
    WheelPair commanded;  // mm/s
    WheelPair actual;     // mm/s
    std::int32_t left_ticks = 0;
    std::int32_t right_ticks = 0;
};

/// Obstacle wall; inactive before `appear_at`.
struct Segment
{
    Point a;
    Point b;
    SimTime appear_at;
};

/// Forward-ray distance to the nearest segment in millimetres, or
/// kNoDistanceReading when nothing lies within `max_range_mm`.
std::uint16_t read_distance(const Pose& pose, std::span<const Segment> obstacles, std::uint32_t max_range_mm);

/// Signed 16-bit sequence comparison (wraps at 65536).
inline bool seq_newer(std::uint16_t candidate, std::uint16_t reference)
{
    return static_cast<std::int16_t>(static_cast<std::uint16_t>(candidate - reference)) > 0;
}

/// Ground-truth robot: wheel slew, exact-arc pose integration, encoder
/// ticks with carried rounding remainder, command staleness, estop latch and
/// a command watchdog.
class Robot
{
public:
    Robot(NodeId id, RobotParams params, Pose initial, std::uint32_t watchdog_cycles = 10);

    NodeId id() const { return id_; }
    const RobotParams& params() const { return params_; }
    const Pose& pose() const { return pose_; }
    const WheelState& wheels() const { return wheels_; }
    bool estop_latched() const { return estop_latched_; }
    bool watchdog_expired() const { return watchdog_expired_; }
    bool stationary() const { return wheels_.actual.left == 0.0 && wheels_.actual.right == 0.0; }

    /// One plant step of dt seconds.
    void tick(double dt);

    /// Applies a command addressed to this robot. Returns false when the
    /// frame is stale or ignored because of the estop latch.
    bool apply_command(const CommandBody& cmd, std::uint16_t seq);

    /// Latches the estop from a broadcast ESTOP frame.
    void apply_estop();

    /// Overrides both wheel speeds directly (tests and initial conditions).
    void set_actual(WheelPair mms) { wheels_.actual = mms; }

private:
    void set_commanded(double left, double right);

    NodeId id_;
    RobotParams params_;
    Pose pose_;
    WheelState wheels_;
    double carry_left_ = 0.0;
    double carry_right_ = 0.0;
    std::optional<std::uint16_t> last_seq_;
    bool estop_latched_ = false;
    std::uint32_t watchdog_cycles_;
    std::uint32_t cycles_without_command_ = 0;
    bool watchdog_expired_ = false;
};

}  // namespace mpsim
