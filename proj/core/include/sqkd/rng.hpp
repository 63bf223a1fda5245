#pragma once

#include <cstdint>
#include <limits>

namespace sqkd {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based stream keyed by (seed, stream, index). Two streams with the
/// same key produce identical draws regardless of which thread or shard
/// creates them. Satisfies UniformRandomBitGenerator.
class StreamRng {
public:
    using result_type = std::uint64_t;

    StreamRng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0)
        : state_(mix64(seed ^ mix64(stream * 0x632be59bd9b4e019ULL + index))) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// Stream identifiers so unrelated consumers of one seed never overlap.
namespace streams {
inline constexpr std::uint64_t kRounds = 1;
inline constexpr std::uint64_t kCheckSample = 2;
inline constexpr std::uint64_t kOptimizer = 3;
inline constexpr std::uint64_t kAttackFamily = 4;
}  // namespace streams

}  // namespace sqkd
