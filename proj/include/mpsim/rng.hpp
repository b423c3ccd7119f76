#pragma once

#include "mpsim/sim_time.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <utility>

namespace mpsim {

/// What a random stream is used for. Each (node, purpose) pair gets its own
/// generator so adding a node or a draw site never shifts anyone else's draws.
enum class RngPurpose : std::uint8_t
{
    channel = 1,
    drift = 2,
    sync_jitter = 3,
    hop_sequence = 4,
};

/// SplitMix64 finaliser, used to derive substream seeds from the master seed.
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_stream_seed(std::uint64_t master, NodeId node, RngPurpose purpose)
{
    const std::uint64_t tag = (static_cast<std::uint64_t>(node) << 8) | static_cast<std::uint64_t>(purpose);
    return splitmix64(master ^ splitmix64(tag + 0x5bd1e995ULL));
}

/// One deterministic random stream. Conversions to real numbers are done here
/// rather than through <random> distributions, whose output is
/// implementation-defined.
class RngStream
{
public:
    RngStream() : RngStream(0) {}
    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    bool bernoulli(double p) { return uniform01() < p; }

    /// Uniform integer in [0, n) by rejection (no modulo bias).
    std::uint64_t below(std::uint64_t n);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// Lazily created substreams keyed by (node, purpose), all derived from one seed.
class RngStreams
{
public:
    explicit RngStreams(std::uint64_t master_seed) : master_(master_seed) {}

    std::uint64_t master_seed() const { return master_; }
    RngStream& stream(NodeId node, RngPurpose purpose);

private:
    std::uint64_t master_;
    std::map<std::pair<NodeId, RngPurpose>, RngStream> streams_;
};

}  // namespace mpsim
