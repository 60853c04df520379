#pragma once

#include <cstdint>

namespace bellnoise {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen over <random> engines with
// library distributions because every step is fully specified here, so the
// same seed produces the same stream on every platform and toolchain.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1): top 53 bits scaled by 2^-53.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in the open interval (0, 1).
    double next_double_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

private:
    std::uint64_t state_;
};

// Decorrelated per-stream seed: one scrambling round over (seed + index)
// so that stream k and stream k+1 do not share shifted output sequences.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace bellnoise
