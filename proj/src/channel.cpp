#include "mpsim/channel.hpp"

#include <cmath>
#include <string>

namespace mpsim {

namespace {

void check_probability(double p, const std::string& what)
{
    if (!(p >= 0.0 && p <= 1.0))
        throw ChannelConfigError(what + " must be in [0,1], got " + std::to_string(p));
}

std::string link_name(NodeId from, NodeId to)
{
    return "link " + std::to_string(from) + "->" + std::to_string(to);
}

}  // namespace

std::uint32_t PhyParams::airtime_us() const
{
    const double us = static_cast<double>(payload_bytes + overhead_bytes) * 8.0 / rate_mbps;
    return static_cast<std::uint32_t>(std::ceil(us - 1e-9));
}

const char* to_string(ReceptionCause c)
{
    switch (c) {
    case ReceptionCause::delivered: return "delivered";
    case ReceptionCause::erased: return "erased";
    case ReceptionCause::no_transmitter: return "no-transmitter";
    case ReceptionCause::desynced_listener: return "desynced-listener";
    }
    return "?";
}

Channel::Channel(std::size_t channel_count, RngStreams& rng) : channel_count_(channel_count), rng_(rng)
{
    if (channel_count == 0 || channel_count > 256)
        throw ChannelConfigError("channel count must be in [1,256]");
}

void Channel::add_link(RadioLinkModel model)
{
    const std::string name = link_name(model.from, model.to);
    if (model.from == model.to)
        throw ChannelConfigError(name + " connects a node to itself");
    if (model.per_channel_per.size() != channel_count_)
        throw ChannelConfigError(name + " has " + std::to_string(model.per_channel_per.size()) +
                                 " per-channel erasure probabilities, expected " + std::to_string(channel_count_));
    for (double p : model.per_channel_per)
        check_probability(p, name + " erasure probability");
    if (model.burst) {
        check_probability(model.burst->p_good_to_bad, name + " p_good_to_bad");
        check_probability(model.burst->p_bad_to_good, name + " p_bad_to_good");
        check_probability(model.burst->per_good, name + " per_good");
        check_probability(model.burst->per_bad, name + " per_bad");
    }
    const auto key = std::make_pair(model.from, model.to);
    links_[key] = LinkState{std::move(model), false};
}

const RadioLinkModel& Channel::link(NodeId from, NodeId to) const
{
    auto it = links_.find({from, to});
    if (it == links_.end())
        throw ChannelConfigError("no model for " + link_name(from, to));
    return it->second.model;
}

Channel::LinkState& Channel::state(NodeId from, NodeId to)
{
    auto it = links_.find({from, to});
    if (it == links_.end())
        throw ChannelConfigError("no model for " + link_name(from, to));
    return it->second;
}

double Channel::erasure_probability(NodeId from, NodeId to, std::uint8_t channel) const
{
    auto it = links_.find({from, to});
    if (it == links_.end())
        throw ChannelConfigError("no model for " + link_name(from, to));
    const LinkState& s = it->second;
    if (s.model.burst)
        return s.bad ? s.model.burst->per_bad : s.model.burst->per_good;
    if (channel >= channel_count_)
        throw std::out_of_range("channel index " + std::to_string(channel) + " out of range");
    return s.model.per_channel_per[channel];
}

bool Channel::draw_success(LinkState& link, std::uint8_t channel, RngStream& rng)
{
    double per = 0.0;
    if (link.model.burst) {
        per = link.bad ? link.model.burst->per_bad : link.model.burst->per_good;
    } else {
        if (channel >= channel_count_)
            throw std::out_of_range("channel index " + std::to_string(channel) + " out of range");
        per = link.model.per_channel_per[channel];
    }
    const bool ok = !rng.bernoulli(per);
    if (link.model.burst) {
        const double flip = link.bad ? link.model.burst->p_bad_to_good : link.model.burst->p_good_to_bad;
        if (rng.bernoulli(flip))
            link.bad = !link.bad;
    }
    return ok;
}

ReceptionOutcome Channel::deliver(const Transmission& tx, NodeId receiver)
{
    LinkState& link = state(tx.sender, receiver);
    RngStream& rng = rng_.stream(receiver, RngPurpose::channel);
    const bool ok = draw_success(link, tx.channel, rng);
    return ReceptionOutcome{receiver, ok, ok ? ReceptionCause::delivered : ReceptionCause::erased};
}

ReceptionOutcome Channel::deliver_flood(std::span<const Transmission> txs, NodeId receiver)
{
    if (txs.empty())
        return ReceptionOutcome{receiver, false, ReceptionCause::no_transmitter};

    const FrameBytes reference = encode_frame(txs.front().frame);
    for (const Transmission& tx : txs) {
        if (encode_frame(tx.frame) != reference)
            throw std::logic_error("flood senders transmit different frames");
        if (tx.channel != txs.front().channel || tx.slot != txs.front().slot)
            throw std::logic_error("flood senders are not on the same slot and channel");
    }

    // One draw per contributing link, all taken, so the stream position does
    // not depend on which link happened to succeed first.
    RngStream& rng = rng_.stream(receiver, RngPurpose::channel);
    bool any = false;
    for (const Transmission& tx : txs) {
        if (tx.sender == receiver)
            continue;
        if (draw_success(state(tx.sender, receiver), tx.channel, rng))
            any = true;
    }
    return ReceptionOutcome{receiver, any, any ? ReceptionCause::delivered : ReceptionCause::erased};
}

double Channel::flood_success_probability(std::span<const double> erasure_probabilities)
{
    if (erasure_probabilities.empty())
        return 0.0;
    double all_fail = 1.0;
    for (double p : erasure_probabilities)
        all_fail *= p;
    return 1.0 - all_fail;
}

}  // namespace mpsim
