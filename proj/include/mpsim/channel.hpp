#pragma once

#include "mpsim/frame.hpp"
#include "mpsim/rng.hpp"
#include "mpsim/sim_time.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace mpsim {

/// Radio constants. Transmit power is informational; it does not enter the
/// erasure math.
struct PhyParams
{
    std::uint32_t payload_bytes = 16;
    std::uint32_t overhead_bytes = 10;
    double rate_mbps = 2.0;
    double tx_power_dbm = 8.0;

    /// (payload + overhead) * 8 / rate, rounded up to whole microseconds.
    std::uint32_t airtime_us() const;
};

/// Two-state (Gilbert-Elliott) burst loss. When present it replaces the
/// static per-channel erasure probability.
struct BurstModel
{
    double p_good_to_bad = 0.0;
    double p_bad_to_good = 1.0;
    double per_good = 0.0;
    double per_bad = 1.0;
};

struct RadioLinkModel
{
    NodeId from = 0;
    NodeId to = 0;
    std::vector<double> per_channel_per;
    std::optional<BurstModel> burst;
};

struct Transmission
{
    NodeId sender = 0;
    Frame frame;
    std::uint32_t slot = 0;
    std::uint8_t channel = 0;
    SimTime start;
    std::uint32_t airtime_us = 0;
};

enum class ReceptionCause : std::uint8_t
{
    delivered = 0,
    erased = 1,
    no_transmitter = 2,
    desynced_listener = 3,
};

const char* to_string(ReceptionCause c);

struct ReceptionOutcome
{
    NodeId receiver = 0;
    bool received = false;
    ReceptionCause cause = ReceptionCause::no_transmitter;
};

class ChannelConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Packet-erasure medium. Every reception draw comes from the receiver's
/// channel stream; burst state is owned here and advanced each time a link
/// is exercised.
class Channel
{
public:
    Channel(std::size_t channel_count, RngStreams& rng);

    std::size_t channel_count() const { return channel_count_; }

    /// Validates probabilities and the per-channel vector length.
    void add_link(RadioLinkModel model);
    bool has_link(NodeId from, NodeId to) const { return links_.count({from, to}) != 0; }
    const RadioLinkModel& link(NodeId from, NodeId to) const;

    /// Erasure probability of the link on `channel` in its current burst state.
    double erasure_probability(NodeId from, NodeId to, std::uint8_t channel) const;

    ReceptionOutcome deliver(const Transmission& tx, NodeId receiver);

    /// Concurrent transmission of one frame by several senders. The receiver
    /// gets it unless every link fails (independent-link approximation).
    /// Throws std::logic_error if the frames or slot/channel differ.
    ReceptionOutcome deliver_flood(std::span<const Transmission> txs, NodeId receiver);

    /// 1 - prod(per_i).
    static double flood_success_probability(std::span<const double> erasure_probabilities);

private:
    struct LinkState
    {
        RadioLinkModel model;
        bool bad = false;
    };

    LinkState& state(NodeId from, NodeId to);
    bool draw_success(LinkState& link, std::uint8_t channel, RngStream& rng);

    std::size_t channel_count_;
    RngStreams& rng_;
    std::map<std::pair<NodeId, NodeId>, LinkState> links_;
};

}  // namespace mpsim
