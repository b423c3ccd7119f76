#pragma once

#include "mpsim/channel.hpp"
#include "mpsim/frame.hpp"

#include <functional>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace mpsim {

/// Where and when one delivery attempt happens.
struct AttemptSlot
{
    std::uint32_t slot = 0;
    std::uint8_t channel = 0;
    SimTime start;
};

struct AttemptResult
{
    std::vector<NodeId> transmitters;
    std::vector<ReceptionOutcome> outcomes;
};

/// Spreads one frame to its targets over successive slots. The first attempt
/// is the origin alone; every later attempt is a concurrent flood by all
/// nodes that hold the frame by then (origin, relays, overhearers).
class Dissemination
{
public:
    Dissemination(Frame frame, NodeId origin, std::vector<NodeId> targets);

    const Frame& frame() const { return frame_; }
    NodeId origin() const { return origin_; }
    const std::vector<NodeId>& targets() const { return targets_; }
    const std::set<NodeId>& holders() const { return holders_; }
    bool has(NodeId node) const { return holders_.count(node) != 0; }
    bool complete() const;
    std::uint32_t attempts() const { return attempts_; }

    /// One attempt. `listeners` are the nodes able to receive in this slot;
    /// those already holding the frame are skipped. Only holders accepted by
    /// `can_transmit` send. Receivers become holders immediately after the slot.
    AttemptResult attempt(Channel& channel, const AttemptSlot& slot, std::uint32_t airtime_us,
                          std::span<const NodeId> listeners,
                          const std::function<bool(NodeId)>& can_transmit = {});

private:
    Frame frame_;
    NodeId origin_;
    std::vector<NodeId> targets_;
    std::set<NodeId> holders_;
    std::uint32_t attempts_ = 0;
};

struct DeliveryReport
{
    bool delivered = false;
    std::uint32_t attempts = 0;
    /// From the primary slot start to the end of the delivering transmission.
    std::optional<std::uint64_t> latency_us;
};

/// Primary attempt in the owner's slot, then up to retx.size() flood attempts
/// while the destination still lacks the frame. `relays` listen in every slot.
DeliveryReport transmit_with_retx(Channel& channel, const Frame& frame, NodeId origin, NodeId destination,
                                  std::span<const NodeId> relays, const AttemptSlot& primary,
                                  std::span<const AttemptSlot> retx, std::uint32_t airtime_us);

}  // namespace mpsim
