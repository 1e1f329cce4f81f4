#pragma once

// Counter-based random streams.
//
// A stream is a 64-bit key; the i-th output is a pure function of (key, i):
//
//     bits(key, i) = splitmix64_finalize(key + (i + 1) * 0x9E3779B97F4A7C15)
//
// so any value can be regenerated independently, in any order and on any
// thread. Keys are derived from a user seed, a stream tag and an optional
// string id (FNV-1a 64). Reference vectors live in docs/rng.md and
// tests/test_rng.cpp.

#include <cstdint>
#include <string_view>

namespace cte::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : text) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Stream tags keep draws for different purposes independent.
enum class StreamTag : std::uint64_t {
    kStrength = 1,
    kNoise = 2,
    kPermutation = 3,
    kScene = 4,
    kModel = 5,
};

class CounterStream {
public:
    constexpr explicit CounterStream(std::uint64_t key) noexcept : key_(key) {}

    static CounterStream derive(std::uint64_t seed, StreamTag tag, std::string_view id = {}) noexcept;

    constexpr std::uint64_t key() const noexcept { return key_; }

    constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
        return mix64(key_ + (counter + 1) * kGolden);
    }

    // Uniform on [0, 1) with 53 bits of resolution.
    double uniform(std::uint64_t counter) const noexcept;

    // Standard normal by Box-Muller over counters 2i and 2i+1.
    double normal(std::uint64_t index) const noexcept;

    // Uniform integer in [0, bound) by rejection, consuming counters from
    // *counter onwards. bound must be positive.
    std::uint64_t below(std::uint64_t bound, std::uint64_t& counter) const noexcept;

    CounterStream substream(std::uint64_t index) const noexcept {
        return CounterStream(mix64(key_ ^ mix64(index + kGolden)));
    }

private:
    std::uint64_t key_;
};

} // namespace cte::rng
