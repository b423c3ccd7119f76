#pragma once

#include "mpsim/sim_time.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <variant>

namespace mpsim {

inline constexpr std::size_t kFrameSize = 16;
inline constexpr std::uint16_t kNoDistanceReading = 0xFFFF;
inline constexpr std::uint8_t kFlagEstop = 0x01;

enum class MsgType : std::uint8_t
{
    sync = 0,
    command = 1,
    feedback = 2,
    estop = 3,
};

const char* to_string(MsgType t);

struct SyncBody
{
    std::uint32_t cycle_index = 0;
    std::uint8_t wave = 0;
    bool operator==(const SyncBody&) const = default;
};

struct CommandBody
{
    std::int16_t left_mms = 0;
    std::int16_t right_mms = 0;
    std::uint8_t flags = 0;

    bool estop() const { return (flags & kFlagEstop) != 0; }
    bool operator==(const CommandBody&) const = default;
};

/// Encoder feedback with the distance-sensor reading piggybacked on it.
struct FeedbackBody
{
    std::int32_t left_ticks = 0;
    std::int32_t right_ticks = 0;
    std::uint16_t distance_mm = kNoDistanceReading;
    bool operator==(const FeedbackBody&) const = default;
};

struct EstopBody
{
    bool operator==(const EstopBody&) const = default;
};

struct Frame
{
    NodeId src = 0;
    NodeId dst = kBroadcast;
    std::uint16_t seq = 0;
    std::variant<SyncBody, CommandBody, FeedbackBody, EstopBody> body;

    MsgType type() const { return static_cast<MsgType>(body.index()); }

    template <typename T>
    const T& as() const
    {
        return std::get<T>(body);
    }

    bool operator==(const Frame&) const = default;
};

Frame make_sync(NodeId src, std::uint16_t seq, std::uint32_t cycle_index, std::uint8_t wave);
Frame make_command(NodeId src, NodeId dst, std::uint16_t seq, std::int16_t left_mms, std::int16_t right_mms,
                   std::uint8_t flags = 0);
Frame make_feedback(NodeId src, NodeId dst, std::uint16_t seq, std::int32_t left_ticks, std::int32_t right_ticks,
                    std::uint16_t distance_mm);
Frame make_estop(NodeId src, std::uint16_t seq);

class FrameError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

using FrameBytes = std::array<std::uint8_t, kFrameSize>;

/// Little-endian 16-byte layout:
///   SYNC  [0]=0 [1]=src [2]=0xFF [3:5]=seq [5:9]=cycle u32 [9]=wave
///   CMD   [0]=1 [1]=src [2]=dst  [3:5]=seq [5:7]=left i16 [7:9]=right i16 [9]=flags
///   FB    [0]=2 [1]=src [2]=dst  [3:5]=seq [5:9]=left i32 [9:13]=right i32 [13:15]=distance u16
///   ESTOP [0]=3 [1]=src [2]=0xFF [3:5]=seq
/// Remaining bytes are zero. SYNC and ESTOP must be broadcast.
FrameBytes encode_frame(const Frame& frame);

/// Rejects wrong length, unknown msg_type, non-broadcast SYNC/ESTOP and
/// nonzero reserved bytes.
Frame decode_frame(std::span<const std::uint8_t> bytes);

}  // namespace mpsim
