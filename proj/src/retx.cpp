#include "mpsim/retx.hpp"

#include <algorithm>

namespace mpsim {

Dissemination::Dissemination(Frame frame, NodeId origin, std::vector<NodeId> targets)
    : frame_(std::move(frame)), origin_(origin), targets_(std::move(targets))
{
    holders_.insert(origin_);
}

bool Dissemination::complete() const
{
    return std::all_of(targets_.begin(), targets_.end(), [&](NodeId t) { return has(t); });
}

AttemptResult Dissemination::attempt(Channel& channel, const AttemptSlot& slot, std::uint32_t airtime_us,
                                     std::span<const NodeId> listeners,
                                     const std::function<bool(NodeId)>& can_transmit)
{
    ++attempts_;
    AttemptResult result;
    for (NodeId h : holders_)
        if (!can_transmit || can_transmit(h))
            result.transmitters.push_back(h);

    std::vector<NodeId> order(listeners.begin(), listeners.end());
    std::sort(order.begin(), order.end());
    order.erase(std::unique(order.begin(), order.end()), order.end());

    std::vector<NodeId> new_holders;
    for (NodeId rx : order) {
        if (has(rx))
            continue;
        std::vector<Transmission> txs;
        for (NodeId tx : result.transmitters)
            if (channel.has_link(tx, rx))
                txs.push_back(Transmission{tx, frame_, slot.slot, slot.channel, slot.start, airtime_us});

        ReceptionOutcome out;
        if (txs.empty())
            out = ReceptionOutcome{rx, false, ReceptionCause::no_transmitter};
        else if (txs.size() == 1)
            out = channel.deliver(txs.front(), rx);
        else
            out = channel.deliver_flood(txs, rx);
        if (out.received)
            new_holders.push_back(rx);
        result.outcomes.push_back(out);
    }
    holders_.insert(new_holders.begin(), new_holders.end());
    return result;
}

DeliveryReport transmit_with_retx(Channel& channel, const Frame& frame, NodeId origin, NodeId destination,
                                  std::span<const NodeId> relays, const AttemptSlot& primary,
                                  std::span<const AttemptSlot> retx, std::uint32_t airtime_us)
{
    std::vector<NodeId> listeners(relays.begin(), relays.end());
    listeners.push_back(destination);

    Dissemination d(frame, origin, {destination});
    DeliveryReport report;

    auto try_slot = [&](const AttemptSlot& s) {
        d.attempt(channel, s, airtime_us, listeners);
        if (d.complete()) {
            report.delivered = true;
            report.attempts = d.attempts();
            report.latency_us = (s.start.ticks - primary.start.ticks) + airtime_us;
            return true;
        }
        return false;
    };

    if (try_slot(primary))
        return report;
    for (const AttemptSlot& s : retx)
        if (try_slot(s))
            return report;
    report.attempts = d.attempts();
    return report;
}

}  // namespace mpsim
