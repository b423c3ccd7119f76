#include "mpsim/clock.hpp"

#include <cmath>
#include <string>

namespace mpsim {

void ClockSet::add(NodeId node, double drift_ppm, double offset_us)
{
    if (std::abs(drift_ppm) > max_drift_ppm_)
        throw std::invalid_argument("clock drift " + std::to_string(drift_ppm) + " ppm exceeds limit " +
                                    std::to_string(max_drift_ppm_) + " ppm");
    clocks_[node] = NodeClock{node, drift_ppm, offset_us, SimTime{}};
}

const NodeClock& ClockSet::clock(NodeId node) const
{
    auto it = clocks_.find(node);
    if (it == clocks_.end())
        throw UnknownNodeError("no clock for node " + std::to_string(node));
    return it->second;
}

NodeClock& ClockSet::mutable_clock(NodeId node)
{
    auto it = clocks_.find(node);
    if (it == clocks_.end())
        throw UnknownNodeError("no clock for node " + std::to_string(node));
    return it->second;
}

void ClockSet::resync(NodeId node, SimTime now, double residual_us)
{
    NodeClock& c = mutable_clock(node);
    c.offset_us = residual_us;
    c.last_sync = now;
}

}  // namespace mpsim
