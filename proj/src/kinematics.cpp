#include "mpsim/kinematics.hpp"

namespace mpsim {

Pose advance_arc(const Pose& pose, double ds, double dtheta)
{
    const double half = 0.5 * dtheta;
    const double sinc = std::abs(half) < 1e-12 ? 1.0 : std::sin(half) / half;
    const double heading = pose.theta + half;
    return Pose{pose.x + ds * std::cos(heading) * sinc, pose.y + ds * std::sin(heading) * sinc,
                normalize_angle(pose.theta + dtheta)};
}

Pose step_kinematics(const Pose& pose, double v_left, double v_right, double track_width, double dt)
{
    if (!(dt > 0.0))
        throw std::invalid_argument("kinematic step requires dt > 0");
    const double v = 0.5 * (v_left + v_right);
    const double omega = (v_right - v_left) / track_width;
    if (std::abs(omega) < 1e-9)
        return advance_arc(pose, v * dt, 0.0);
    return advance_arc(pose, v * dt, omega * dt);
}

}  // namespace mpsim
