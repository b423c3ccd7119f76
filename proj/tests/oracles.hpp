#pragma once

// Independent reference computations used as test oracles. Nothing here
// calls into the library's numerical code.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

inline double binomial_sigma(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

struct State
{
    double x = 0.0;
    double y = 0.0;
    double th = 0.0;
};

/// Classic RK4 on the unicycle ODE x' = v cos th, y' = v sin th, th' = w.
inline State rk4(State s, double v_left, double v_right, double track, double dt, double h = 1e-4)
{
    const double v = 0.5 * (v_left + v_right);
    const double w = (v_right - v_left) / track;
    auto f = [&](const State& q) { return State{v * std::cos(q.th), v * std::sin(q.th), w}; };
    const auto steps = static_cast<long>(std::ceil(dt / h - 1e-9));
    const double step = dt / static_cast<double>(steps);
    for (long i = 0; i < steps; ++i) {
        const State k1 = f(s);
        const State k2 = f({s.x + 0.5 * step * k1.x, s.y + 0.5 * step * k1.y, s.th + 0.5 * step * k1.th});
        const State k3 = f({s.x + 0.5 * step * k2.x, s.y + 0.5 * step * k2.y, s.th + 0.5 * step * k2.th});
        const State k4 = f({s.x + step * k3.x, s.y + step * k3.y, s.th + step * k3.th});
        s.x += step / 6.0 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
        s.y += step / 6.0 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y);
        s.th += step / 6.0 * (k1.th + 2 * k2.th + 2 * k3.th + k4.th);
    }
    return s;
}

/// Byte-by-byte little-endian packing, written out longhand.
inline void put_u16(std::array<std::uint8_t, 16>& b, int at, std::uint16_t v)
{
    b[at] = static_cast<std::uint8_t>(v % 256);
    b[at + 1] = static_cast<std::uint8_t>(v / 256);
}

inline void put_u32(std::array<std::uint8_t, 16>& b, int at, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) {
        b[at + i] = static_cast<std::uint8_t>(v % 256);
        v /= 256;
    }
}

/// Distance from (px,py) to segment (ax,ay)-(bx,by) by ternary-free projection.
inline double point_segment(double px, double py, double ax, double ay, double bx, double by)
{
    const double vx = bx - ax;
    const double vy = by - ay;
    const double len2 = vx * vx + vy * vy;
    double t = len2 == 0.0 ? 0.0 : ((px - ax) * vx + (py - ay) * vy) / len2;
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    return std::sqrt((px - ax - t * vx) * (px - ax - t * vx) + (py - ay - t * vy) * (py - ay - t * vy));
}

}  // namespace oracle
