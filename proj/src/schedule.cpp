#include "mpsim/schedule.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

namespace mpsim {

const char* to_string(SlotKind k)
{
    switch (k) {
    case SlotKind::sync: return "sync";
    case SlotKind::uplink: return "uplink";
    case SlotKind::compute: return "compute";
    case SlotKind::downlink: return "downlink";
    case SlotKind::retx: return "retx";
    }
    return "?";
}

HopSequence make_hop_sequence(std::uint32_t channels, RngStream& rng)
{
    if (channels == 0 || channels > 128)
        throw ScheduleError("channels per band must be in [1,128]");
    HopSequence hop;
    hop.order.resize(channels);
    std::iota(hop.order.begin(), hop.order.end(), std::uint8_t{0});
    for (std::size_t i = channels - 1; i > 0; --i) {
        const std::size_t j = rng.below(i + 1);
        std::swap(hop.order[i], hop.order[j]);
    }
    return hop;
}

CycleSchedule::CycleSchedule(std::vector<Slot> slots, ScheduleParams params, HopSequence hop, NodeId controller)
    : slots_(std::move(slots)), params_(params), hop_(std::move(hop)), controller_(controller)
{
    for (std::size_t i = 0; i < slots_.size(); ++i)
        if (slots_[i].kind == SlotKind::compute)
            compute_position_ = i;
    *this = for_cycle(0);
}

std::uint32_t CycleSchedule::cycle_length_us() const
{
    return cycle_length(*this, params_.slot_duration_us, params_.compute_gap_us);
}

std::uint32_t CycleSchedule::slot_offset_us(std::size_t position) const
{
    std::uint32_t offset = static_cast<std::uint32_t>(position) * params_.slot_duration_us;
    if (compute_position_ && position > *compute_position_)
        offset += params_.compute_gap_us;
    return offset;
}

std::uint8_t CycleSchedule::channel_for(std::size_t position, std::uint32_t cycle_index) const
{
    const Slot& s = slots_.at(position);
    if (s.band == Band::none || hop_.order.empty())
        return 0;
    const std::size_t n = hop_.size();
    const std::uint8_t ch = hop_.order[(static_cast<std::size_t>(cycle_index) + position) % n];
    return s.band == Band::feedback ? static_cast<std::uint8_t>(ch + n) : ch;
}

CycleSchedule CycleSchedule::for_cycle(std::uint32_t cycle_index) const
{
    CycleSchedule c = *this;
    c.cycle_index_ = cycle_index;
    for (std::size_t i = 0; i < c.slots_.size(); ++i)
        c.slots_[i].channel = channel_for(i, cycle_index);
    return c;
}

std::optional<std::size_t> CycleSchedule::position_of(SlotKind kind, std::optional<std::uint32_t> loop_id) const
{
    for (std::size_t i = 0; i < slots_.size(); ++i)
        if (slots_[i].kind == kind && (!loop_id || slots_[i].loop_id == loop_id))
            return i;
    return std::nullopt;
}

std::vector<std::size_t> CycleSchedule::retx_positions() const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < slots_.size(); ++i)
        if (slots_[i].kind == SlotKind::retx)
            out.push_back(i);
    return out;
}

CycleSchedule build_schedule(std::span<const LoopSpec> loops, const ScheduleParams& params, HopSequence hop,
                             std::span<const NodeId> roster)
{
    if (loops.empty())
        throw ScheduleError("at least one control loop is required");
    if (params.slot_duration_us == 0)
        throw ScheduleError("slot duration must be positive");
    if (hop.size() != params.channels_per_band)
        throw ScheduleError("hop sequence length does not match channels per band");

    std::vector<LoopSpec> sorted(loops.begin(), loops.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const LoopSpec& a, const LoopSpec& b) { return a.loop_id < b.loop_id; });

    const std::set<NodeId> known(roster.begin(), roster.end());
    auto require_known = [&](NodeId n, std::uint32_t loop) {
        if (!known.empty() && known.count(n) == 0)
            throw ScheduleError("loop " + std::to_string(loop) + " references unknown node " + std::to_string(n));
    };

    const NodeId controller = sorted.front().controller;
    std::set<std::uint32_t> loop_ids;
    std::set<NodeId> uplink_owners;
    for (const LoopSpec& l : sorted) {
        if (!loop_ids.insert(l.loop_id).second)
            throw ScheduleError("duplicate loop id " + std::to_string(l.loop_id));
        if (l.controller != controller)
            throw ScheduleError("all loops must share one controller");
        if (l.controller == l.plant)
            throw ScheduleError("loop " + std::to_string(l.loop_id) + " has controller == plant");
        if (l.plant == kBroadcast || l.controller == kBroadcast)
            throw ScheduleError("loop " + std::to_string(l.loop_id) + " uses the broadcast id as a node");
        require_known(l.controller, l.loop_id);
        require_known(l.plant, l.loop_id);
        std::set<NodeId> relays;
        for (NodeId r : l.relays) {
            if (r == l.controller || r == l.plant || !relays.insert(r).second)
                throw ScheduleError("loop " + std::to_string(l.loop_id) + " has an invalid relay " +
                                    std::to_string(r));
            require_known(r, l.loop_id);
        }
        if (!uplink_owners.insert(l.plant).second)
            throw ScheduleError("plant " + std::to_string(l.plant) + " would own more than one uplink slot");
    }

    std::vector<Slot> slots;
    auto add = [&](std::optional<NodeId> owner, SlotKind kind, Band band, std::optional<std::uint32_t> loop) {
        slots.push_back(Slot{static_cast<std::uint32_t>(slots.size()), owner, kind, band, loop, 0});
    };

    add(std::nullopt, SlotKind::sync, Band::forward, std::nullopt);
    for (const LoopSpec& l : sorted)
        add(l.plant, SlotKind::uplink, Band::feedback, l.loop_id);
    add(controller, SlotKind::compute, Band::none, std::nullopt);
    for (const LoopSpec& l : sorted)
        add(l.controller, SlotKind::downlink, Band::forward, l.loop_id);
    for (std::uint32_t i = 0; i < params.retx_slots; ++i)
        add(std::nullopt, SlotKind::retx, Band::forward, std::nullopt);

    return CycleSchedule(std::move(slots), params, std::move(hop), controller);
}

std::uint32_t cycle_length(const CycleSchedule& schedule, std::uint32_t slot_duration_us, std::uint32_t compute_gap_us)
{
    return static_cast<std::uint32_t>(schedule.slots().size()) * slot_duration_us + compute_gap_us;
}

}  // namespace mpsim
