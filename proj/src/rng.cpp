#include "cte/rng.hpp"

#include <cmath>
#include <numbers>

namespace cte::rng {

CounterStream CounterStream::derive(std::uint64_t seed, StreamTag tag, std::string_view id) noexcept {
    std::uint64_t key = mix64(seed);
    key = mix64(key ^ (static_cast<std::uint64_t>(tag) * kGolden));
    key = mix64(key ^ fnv1a64(id));
    return CounterStream(key);
}

double CounterStream::uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
}

double CounterStream::normal(std::uint64_t index) const noexcept {
    // u1 in (0, 1] keeps the logarithm finite.
    double u1 = static_cast<double>((bits(2 * index) >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterStream::below(std::uint64_t bound, std::uint64_t& counter) const noexcept {
    // Reject the top partial bucket so every residue is equally likely.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    for (;;) {
        std::uint64_t r = bits(counter++);
        if (r < limit)
            return r % bound;
    }
}

} // namespace cte::rng
