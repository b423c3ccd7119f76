#include "mpsim/robot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mpsim {

void RobotParams::validate() const
{
    if (!(wheel_radius_m > 0.0) || !(track_width_m > 0.0) || ticks_per_rev == 0 || max_wheel_speed_mms == 0 ||
        !(actuation_rate_limit_mms2 > 0.0) || sensor_max_range_mm == 0)
        throw std::invalid_argument("robot parameters must all be strictly positive");
}

double RobotParams::tick_quantum_m() const
{
    return 2.0 * std::numbers::pi * wheel_radius_m / static_cast<double>(ticks_per_rev);
}

std::uint16_t read_distance(const Pose& pose, std::span<const Segment> obstacles, std::uint32_t max_range_mm)
{
    const double dx = std::cos(pose.theta);
    const double dy = std::sin(pose.theta);
    double best = std::numeric_limits<double>::infinity();

    for (const Segment& s : obstacles) {
        // Solve pose + t*d = a + u*(b - a), t >= 0, u in [0,1].
        const double ex = s.b.x - s.a.x;
        const double ey = s.b.y - s.a.y;
        const double denom = dx * ey - dy * ex;
        if (std::abs(denom) < 1e-12)
            continue;
        const double wx = s.a.x - pose.x;
        const double wy = s.a.y - pose.y;
        const double t = (wx * ey - wy * ex) / denom;
        const double u = (wx * dy - wy * dx) / denom;
        if (t >= 0.0 && u >= 0.0 && u <= 1.0)
            best = std::min(best, t);
    }

    const double mm = best * 1000.0;
    if (!(mm <= static_cast<double>(max_range_mm)))
        return kNoDistanceReading;
    return static_cast<std::uint16_t>(std::min(std::lround(mm), static_cast<long>(kNoDistanceReading - 1)));
}

Robot::Robot(NodeId id, RobotParams params, Pose initial, std::uint32_t watchdog_cycles)
    : id_(id), params_(params), pose_(initial), watchdog_cycles_(watchdog_cycles)
{
    params_.validate();
    pose_.theta = normalize_angle(pose_.theta);
}

void Robot::set_commanded(double left, double right)
{
    const double lim = params_.max_wheel_speed_mms;
    wheels_.commanded = WheelPair{std::clamp(left, -lim, lim), std::clamp(right, -lim, lim)};
}

void Robot::tick(double dt)
{
    if (++cycles_without_command_ >= watchdog_cycles_ && !watchdog_expired_) {
        watchdog_expired_ = true;
        wheels_.commanded = WheelPair{};
    }

    const double max_change = params_.actuation_rate_limit_mms2 * dt;
    auto slew = [&](double actual, double target) {
        const double next = actual + std::clamp(target - actual, -max_change, max_change);
        const double lim = params_.max_wheel_speed_mms;
        return std::clamp(next, -lim, lim);
    };
    wheels_.actual.left = slew(wheels_.actual.left, wheels_.commanded.left);
    wheels_.actual.right = slew(wheels_.actual.right, wheels_.commanded.right);

    const double vl = wheels_.actual.left * 1e-3;
    const double vr = wheels_.actual.right * 1e-3;
    if (vl != 0.0 || vr != 0.0)
        pose_ = step_kinematics(pose_, vl, vr, params_.track_width_m, dt);

    const double ticks_per_m = 1.0 / params_.tick_quantum_m();
    auto advance = [&](double& carry, std::int32_t& ticks, double v) {
        carry += v * dt * ticks_per_m;
        const double whole = std::nearbyint(carry);
        carry -= whole;
        // Cumulative counters wrap like the hardware's 32-bit registers.
        ticks = static_cast<std::int32_t>(static_cast<std::uint32_t>(ticks) +
                                          static_cast<std::uint32_t>(static_cast<std::int64_t>(whole)));
    };
    advance(carry_left_, wheels_.left_ticks, vl);
    advance(carry_right_, wheels_.right_ticks, vr);
}

bool Robot::apply_command(const CommandBody& cmd, std::uint16_t seq)
{
    if (last_seq_ && !seq_newer(seq, *last_seq_))
        return false;
    last_seq_ = seq;
    cycles_without_command_ = 0;
    watchdog_expired_ = false;

    if (cmd.estop()) {
        estop_latched_ = true;
        wheels_.commanded = WheelPair{};
        return true;
    }
    if (estop_latched_)
        return false;
    set_commanded(cmd.left_mms, cmd.right_mms);
    return true;
}

void Robot::apply_estop()
{
    estop_latched_ = true;
    wheels_.commanded = WheelPair{};
}

}  // namespace mpsim
