#include "mpsim/frame.hpp"

#include <string>

namespace mpsim {

namespace {

void put_u16(FrameBytes& b, std::size_t at, std::uint16_t v)
{
    b[at] = static_cast<std::uint8_t>(v & 0xFF);
    b[at + 1] = static_cast<std::uint8_t>(v >> 8);
}

void put_u32(FrameBytes& b, std::size_t at, std::uint32_t v)
{
    for (std::size_t i = 0; i < 4; ++i)
        b[at + i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF);
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at)
{
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at)
{
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
    return v;
}

void require_zero(std::span<const std::uint8_t> b, std::size_t from)
{
    for (std::size_t i = from; i < b.size(); ++i)
        if (b[i] != 0)
            throw FrameError("reserved byte " + std::to_string(i) + " is nonzero");
}

void require_broadcast(NodeId dst, const char* what)
{
    if (dst != kBroadcast)
        throw FrameError(std::string(what) + " frame must be addressed to broadcast");
}

}  // namespace

const char* to_string(MsgType t)
{
    switch (t) {
    case MsgType::sync: return "SYNC";
    case MsgType::command: return "CMD";
    case MsgType::feedback: return "FB";
    case MsgType::estop: return "ESTOP";
    }
    return "?";
}

Frame make_sync(NodeId src, std::uint16_t seq, std::uint32_t cycle_index, std::uint8_t wave)
{
    return Frame{src, kBroadcast, seq, SyncBody{cycle_index, wave}};
}

Frame make_command(NodeId src, NodeId dst, std::uint16_t seq, std::int16_t left_mms, std::int16_t right_mms,
                   std::uint8_t flags)
{
    return Frame{src, dst, seq, CommandBody{left_mms, right_mms, flags}};
}

Frame make_feedback(NodeId src, NodeId dst, std::uint16_t seq, std::int32_t left_ticks, std::int32_t right_ticks,
                    std::uint16_t distance_mm)
{
    return Frame{src, dst, seq, FeedbackBody{left_ticks, right_ticks, distance_mm}};
}

Frame make_estop(NodeId src, std::uint16_t seq)
{
    return Frame{src, kBroadcast, seq, EstopBody{}};
}

FrameBytes encode_frame(const Frame& frame)
{
    FrameBytes b{};
    b[0] = static_cast<std::uint8_t>(frame.type());
    b[1] = frame.src;
    b[2] = frame.dst;
    put_u16(b, 3, frame.seq);

    switch (frame.type()) {
    case MsgType::sync: {
        require_broadcast(frame.dst, "SYNC");
        const auto& s = frame.as<SyncBody>();
        put_u32(b, 5, s.cycle_index);
        b[9] = s.wave;
        break;
    }
    case MsgType::command: {
        const auto& c = frame.as<CommandBody>();
        put_u16(b, 5, static_cast<std::uint16_t>(c.left_mms));
        put_u16(b, 7, static_cast<std::uint16_t>(c.right_mms));
        b[9] = c.flags;
        break;
    }
    case MsgType::feedback: {
        const auto& f = frame.as<FeedbackBody>();
        put_u32(b, 5, static_cast<std::uint32_t>(f.left_ticks));
        put_u32(b, 9, static_cast<std::uint32_t>(f.right_ticks));
        put_u16(b, 13, f.distance_mm);
        break;
    }
    case MsgType::estop:
        require_broadcast(frame.dst, "ESTOP");
        break;
    }
    return b;
}

Frame decode_frame(std::span<const std::uint8_t> b)
{
    if (b.size() != kFrameSize)
        throw FrameError("frame must be exactly 16 bytes, got " + std::to_string(b.size()));
    if (b[0] > static_cast<std::uint8_t>(MsgType::estop))
        throw FrameError("unknown msg_type " + std::to_string(b[0]));

    const NodeId src = b[1];
    const NodeId dst = b[2];
    const std::uint16_t seq = get_u16(b, 3);

    switch (static_cast<MsgType>(b[0])) {
    case MsgType::sync:
        require_broadcast(dst, "SYNC");
        require_zero(b, 10);
        return make_sync(src, seq, get_u32(b, 5), b[9]);
    case MsgType::command:
        require_zero(b, 10);
        return make_command(src, dst, seq, static_cast<std::int16_t>(get_u16(b, 5)),
                            static_cast<std::int16_t>(get_u16(b, 7)), b[9]);
    case MsgType::feedback:
        require_zero(b, 15);
        return make_feedback(src, dst, seq, static_cast<std::int32_t>(get_u32(b, 5)),
                             static_cast<std::int32_t>(get_u32(b, 9)), get_u16(b, 13));
    case MsgType::estop:
        require_broadcast(dst, "ESTOP");
        require_zero(b, 5);
        return make_estop(src, seq);
    }
    throw FrameError("unreachable msg_type");
}

}  // namespace mpsim
