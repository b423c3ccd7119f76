#include "mpsim/rng.hpp"

#include <limits>

namespace mpsim {

std::uint64_t RngStream::below(std::uint64_t n)
{
    if (n <= 1)
        return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit)
        x = engine_();
    return x % n;
}

RngStream& RngStreams::stream(NodeId node, RngPurpose purpose)
{
    const auto key = std::make_pair(node, purpose);
    auto it = streams_.find(key);
    if (it == streams_.end())
        it = streams_.emplace(key, RngStream(derive_stream_seed(master_, node, purpose))).first;
    return it->second;
}

}  // namespace mpsim
