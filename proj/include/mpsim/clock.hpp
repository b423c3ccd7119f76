#pragma once

#include "mpsim/sim_time.hpp"

#include <map>
#include <stdexcept>

namespace mpsim {

/// Constant-drift local oscillator of one node.
///   local_time(t) = t + offset_us + drift_ppm * 1e-6 * (t - last_sync)
struct NodeClock
{
    NodeId owner = 0;
    double drift_ppm = 0.0;
    double offset_us = 0.0;
    SimTime last_sync;

    double local_time(SimTime t) const
    {
        const double since = static_cast<double>(t.ticks) - static_cast<double>(last_sync.ticks);
        return static_cast<double>(t.ticks) + offset_us + drift_ppm * 1e-6 * since;
    }

    double error_us(SimTime t) const { return local_time(t) - static_cast<double>(t.ticks); }
};

class UnknownNodeError : public std::out_of_range
{
public:
    using std::out_of_range::out_of_range;
};

/// Clocks of every node in a run.
class ClockSet
{
public:
    explicit ClockSet(double max_drift_ppm = 40.0) : max_drift_ppm_(max_drift_ppm) {}

    /// Throws std::invalid_argument when |drift_ppm| exceeds the configured maximum.
    void add(NodeId node, double drift_ppm, double offset_us = 0.0);

    bool contains(NodeId node) const { return clocks_.count(node) != 0; }
    const NodeClock& clock(NodeId node) const;

    /// Throws UnknownNodeError for a node without a clock.
    double local_time(NodeId node, SimTime true_time) const { return clock(node).local_time(true_time); }

    /// Re-anchors the clock at `now` with the given residual offset.
    void resync(NodeId node, SimTime now, double residual_us);

    double max_drift_ppm() const { return max_drift_ppm_; }

private:
    NodeClock& mutable_clock(NodeId node);

    double max_drift_ppm_;
    std::map<NodeId, NodeClock> clocks_;
};

}  // namespace mpsim
