#pragma once
#include <cstdint>

// Counter-based uniform random numbers (SplitMix64 finalizer).
// Every draw is a pure function of (seed, stage tag, counter), so any entry of
// any stream can be regenerated independently and runs are bit-reproducible.

namespace wavesrc {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Stage tags for substream derivation from the single run seed.
namespace rng_stage {
inline constexpr std::uint64_t noise_f = 0x464E4F4953452D46ULL;
inline constexpr std::uint64_t noise_g = 0x464E4F4953452D47ULL;
} // namespace rng_stage

struct CounterRng {
    std::uint64_t base;
    CounterRng(std::uint64_t seed, std::uint64_t stage) : base(splitmix64(seed ^ stage)) {}

    // k-th draw, uniform on [0,1).
    double uniform01(std::uint64_t k) const {
        return double(splitmix64(base + k) >> 11) * 0x1.0p-53;
    }
    // k-th draw, uniform on [-1,1].
    double symmetric(std::uint64_t k) const { return 2.0 * uniform01(k) - 1.0; }
};

} // namespace wavesrc
