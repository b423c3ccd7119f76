#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mpsim {

/// Planar pose; theta is kept in (-pi, pi].
struct Pose
{
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

struct Point
{
    double x = 0.0;
    double y = 0.0;
};

inline double normalize_angle(double a)
{
    a = std::remainder(a, 2.0 * std::numbers::pi);  // [-pi, pi]
    if (a <= -std::numbers::pi)
        a += 2.0 * std::numbers::pi;
    return a;
}

inline double distance(const Point& a, const Point& b) { return std::hypot(b.x - a.x, b.y - a.y); }
inline double distance(const Pose& p, const Point& b) { return std::hypot(b.x - p.x, b.y - p.y); }

/// Moves along a circular arc of length `ds` while turning by `dtheta`
/// (straight line when dtheta is zero). Uses the chord form
///   dx = ds * cos(theta + dtheta/2) * sinc(dtheta/2)
/// which equals R*(sin theta' - sin theta) without the cancellation at small
/// turn rates.
Pose advance_arc(const Pose& pose, double ds, double dtheta);

/// Exact differential-drive integration over dt with constant wheel speeds
/// (m/s). Throws std::invalid_argument when dt <= 0.
Pose step_kinematics(const Pose& pose, double v_left, double v_right, double track_width, double dt);

}  // namespace mpsim
