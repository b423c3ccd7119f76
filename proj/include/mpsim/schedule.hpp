#pragma once

#include "mpsim/rng.hpp"
#include "mpsim/sim_time.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace mpsim {

enum class SlotKind : std::uint8_t
{
    sync,
    uplink,    // feedback, plant -> controller
    compute,   // controller runs; no radio activity
    downlink,  // command, controller -> plant
    retx,      // shared retransmission flood
};

/// FDD band. Forward carries sync, commands and retransmissions; feedback
/// carries the uplink slots.
enum class Band : std::uint8_t
{
    forward,
    feedback,
    none,
};

const char* to_string(SlotKind k);

struct Slot
{
    std::uint32_t index = 0;
    std::optional<NodeId> owner;  // empty for flood slots
    SlotKind kind = SlotKind::sync;
    Band band = Band::forward;
    std::optional<std::uint32_t> loop_id;
    std::uint8_t channel = 0;

    bool is_flood() const { return !owner.has_value(); }
};

struct LoopSpec
{
    std::uint32_t loop_id = 0;
    NodeId controller = 0;
    NodeId plant = 0;
    std::vector<NodeId> relays;
};

struct ScheduleParams
{
    std::uint32_t slot_duration_us = 250;
    std::uint32_t compute_gap_us = 500;
    std::uint32_t retx_slots = 2;
    std::uint32_t channels_per_band = 8;
};

/// Channel order shared by both bands; the feedback band is offset by the
/// band size so the two sets are disjoint.
struct HopSequence
{
    std::vector<std::uint8_t> order;

    std::size_t size() const { return order.size(); }
};

/// Fisher-Yates permutation of 0..channels-1 drawn from `rng`.
HopSequence make_hop_sequence(std::uint32_t channels, RngStream& rng);

class ScheduleError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

class CycleSchedule
{
public:
    CycleSchedule() = default;
    CycleSchedule(std::vector<Slot> slots, ScheduleParams params, HopSequence hop, NodeId controller);

    std::uint32_t cycle_index() const { return cycle_index_; }
    const std::vector<Slot>& slots() const { return slots_; }
    const ScheduleParams& params() const { return params_; }
    const HopSequence& hop() const { return hop_; }
    NodeId controller() const { return controller_; }

    std::uint32_t cycle_length_us() const;

    /// Offset of a slot start from the cycle start. Slots after the compute
    /// slot are pushed back by the compute gap.
    std::uint32_t slot_offset_us(std::size_t position) const;

    std::uint8_t channel_for(std::size_t position, std::uint32_t cycle_index) const;

    /// Same slot layout with the hop channels of another cycle.
    CycleSchedule for_cycle(std::uint32_t cycle_index) const;

    std::optional<std::size_t> position_of(SlotKind kind, std::optional<std::uint32_t> loop_id = {}) const;
    std::vector<std::size_t> retx_positions() const;

private:
    std::uint32_t cycle_index_ = 0;
    std::vector<Slot> slots_;
    ScheduleParams params_;
    HopSequence hop_;
    NodeId controller_ = 0;
    std::optional<std::size_t> compute_position_;
};

/// Slot order: [sync] [uplink per loop] [compute] [downlink per loop] [retx x R],
/// loops in loop-id order. All loops must share one controller; if `roster`
/// is non-empty every referenced node must appear in it.
CycleSchedule build_schedule(std::span<const LoopSpec> loops, const ScheduleParams& params, HopSequence hop,
                             std::span<const NodeId> roster = {});

/// slots * slot_duration + compute_gap. The compute slot counts as a slot.
std::uint32_t cycle_length(const CycleSchedule& schedule, std::uint32_t slot_duration_us,
                           std::uint32_t compute_gap_us);

}  // namespace mpsim
