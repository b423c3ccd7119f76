#pragma once

#include <compare>
#include <cstdint>

namespace mpsim {

/// Virtual time in microsecond ticks. Tick 0 is the start of a run.
struct SimTime
{
    std::uint64_t ticks = 0;

    constexpr SimTime() = default;
    constexpr explicit SimTime(std::uint64_t us) : ticks(us) {}

    static constexpr SimTime from_seconds(double s)
    {
        return SimTime(static_cast<std::uint64_t>(s * 1e6 + 0.5));
    }

    constexpr double seconds() const { return static_cast<double>(ticks) * 1e-6; }

    constexpr auto operator<=>(const SimTime&) const = default;

    constexpr SimTime operator+(std::uint64_t us) const { return SimTime(ticks + us); }
    constexpr SimTime& operator+=(std::uint64_t us)
    {
        ticks += us;
        return *this;
    }
};

using NodeId = std::uint8_t;
inline constexpr NodeId kBroadcast = 0xFF;

}  // namespace mpsim
