#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pfb {

// Counter-based noise source: every draw is a pure function of
// (seed, stream, counter). SplitMix64 mixing feeds a Box-Muller transform,
// so sequences are identical on every platform with IEEE doubles and a
// conforming libm, independent of <random> distribution implementations.
inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) + counter);
}

// Uniform in (0, 1], 53 bits.
inline double uniform01(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

inline double uniform_draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept {
    return uniform01(mix_key(seed, stream, 2 * counter));
}

inline double standard_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept {
    const double u1 = uniform01(mix_key(seed, stream, 2 * counter));
    const double u2 = uniform01(mix_key(seed, stream, 2 * counter + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Stream identifiers, so independent consumers of one seed never collide.
namespace stream {
inline constexpr std::uint64_t kLoadNoise = 0x6c6f6164;    // "load"
inline constexpr std::uint64_t kOperator = 0x6f706572;     // "oper"
inline constexpr std::uint64_t kOperatorInit = 0x696e6974; // "init"
}  // namespace stream

}  // namespace pfb
