#pragma once

#include "mpsim/sim_time.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mpsim {

enum class TraceKind : std::uint8_t
{
    cycle,        // f1 = cycle length us
    sync_tx,      // slot, channel, seq; f1 = wave
    sync_rx,      // slot, channel, peer = originator; f1 = wave, f2 = residual us
    sync_miss,    // f1 = missed beacons, f2 = synced
    desync,       // f1 = missed beacons
    tx,           // slot, channel, peer = dst, seq; f1 = msg type, f2 = attempt
    rx,           // slot, channel, peer = src, seq; f1 = msg type, f2 = cause, f3 = attempt
    fb_sample,    // node = robot, seq; f1 = left ticks, f2 = right ticks, f3 = distance mm
    estimate,     // node = controller, peer = robot; f1..f3 = x, y, theta
    decision,     // peer = robot, seq; f1 = left, f2 = right, f3 = flags, f4 = ref index,
                  // f5 = informing sample time us, f6 = complete
    apply,        // node = robot, peer = src, seq; f1 = left, f2 = right, f3 = flags,
                  // f4 = applied, f5 = local (not over the radio)
    pose,         // node = robot; f1..f3 = x, y, theta, f4/f5 = actual wheel mm/s, f6 = true distance mm
    estop,        // node = controller, peer = triggering robot; f1 = distance mm
    estop_apply,  // node = robot
    complete,     // node = controller, peer = robot
    watchdog,     // node = robot
};

std::string_view to_string(TraceKind k);
std::optional<TraceKind> trace_kind_from_string(std::string_view s);

inline constexpr double kNoValue = std::numeric_limits<double>::quiet_NaN();

struct TraceRow
{
    SimTime time;
    std::uint32_t cycle = 0;
    NodeId node = 0;
    TraceKind kind = TraceKind::cycle;
    std::int32_t slot = -1;
    std::int32_t channel = -1;
    std::int32_t peer = -1;
    std::int64_t seq = -1;
    std::array<double, 6> f{kNoValue, kNoValue, kNoValue, kNoValue, kNoValue, kNoValue};

    bool has(std::size_t i) const { return !std::isnan(f[i]); }
};

class TraceError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Append-only event log. Time never decreases.
class Trace
{
public:
    static constexpr std::string_view kHeader = "time_us,cycle,node,kind,slot,channel,peer,seq,f1,f2,f3,f4,f5,f6";

    void append(const TraceRow& row);
    const std::vector<TraceRow>& rows() const { return rows_; }
    bool empty() const { return rows_.empty(); }
    std::size_t size() const { return rows_.size(); }

    void write_csv(std::ostream& out) const;
    std::string to_csv() const;
    static Trace read_csv(std::istream& in);

private:
    std::vector<TraceRow> rows_;
};

/// Shortest round-trip decimal text of a double (locale independent).
std::string format_number(double v);

}  // namespace mpsim
