#pragma once

#include <cstdint>

namespace fbmlab {

// Splittable, bit-reproducible RNG.  Every consumer derives its own stream
// from (seed, stream id); disjoint ids give statistically independent
// streams, and results do not depend on evaluation order or thread count.
// xoshiro256** seeded through splitmix64; normals via Box-Muller on exact
// 53-bit uniforms (std::normal_distribution is implementation-defined, so
// it is not used anywhere).
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();
    // uniform on (0,1]
    double uniform01();
    double gauss();

private:
    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// Stable stream-id composition for (purpose, path index, component).
std::uint64_t stream_id(std::uint64_t purpose, std::uint64_t index,
                        std::uint64_t component = 0);

// Fixed purpose tags for the RNG stream ledger.
namespace stream_purpose {
inline constexpr std::uint64_t kFbm = 1;
inline constexpr std::uint64_t kBm = 2;
inline constexpr std::uint64_t kFrozenFast = 3;
inline constexpr std::uint64_t kMonteCarlo = 4;
inline constexpr std::uint64_t kControls = 5;
inline constexpr std::uint64_t kScratch = 6;
}  // namespace stream_purpose

}  // namespace fbmlab
