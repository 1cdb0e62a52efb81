#pragma once

#include <cstdint>

namespace malfam {

/// SplitMix64 step; used to expand seeds and to derive identifiers.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// xorshift64* (Vigna). Output is fully specified here, so generated corpora
/// are identical on every platform and standard library.
class Xorshift64Star {
public:
    explicit constexpr Xorshift64Star(std::uint64_t seed) {
        std::uint64_t s = seed;
        state_ = splitmix64(s);
        if (state_ == 0) state_ = 0x9E3779B97F4A7C15ull;
    }

    constexpr std::uint64_t next() {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1Dull;
    }

    /// Uniform integer in [0, bound). bound must be positive.
    constexpr std::uint64_t below(std::uint64_t bound) {
        // rejection sampling on the top of the range keeps it unbiased
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v = next();
        while (v >= limit) v = next();
        return v % bound;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    constexpr bool chance(double p) { return unit() < p; }

private:
    std::uint64_t state_ = 0;
};

}  // namespace malfam
