#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace gdl {

// Clamp range for uniforms feeding -log(-log u).
inline constexpr double kUniformLow = 1e-300;
inline constexpr double kUniformHigh = 1.0 - 1e-16;

std::uint64_t mix64(std::uint64_t x);

// FNV-1a; used to turn stream names ("data", "init", ...) into keys.
std::uint64_t name_key(std::string_view name);

// Deterministic seed for a named sub-stream. Identical (seed, keys) always
// give the same stream, independent of call order elsewhere.
std::uint64_t stream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

// Seeded random stream. Every draw is built from raw 64-bit engine output so
// sequences are identical across standard-library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
        return Rng(stream_seed(seed, keys));
    }

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1) with 53 bits of resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Strictly inside (0, 1): clamped to [kUniformLow, kUniformHigh].
    double uniform_open();

    // Unbiased integer in [0, n). n must be positive.
    std::size_t below(std::size_t n);

    // Standard normal via Box-Muller (no cached second value).
    double normal();

private:
    std::mt19937_64 engine_;
};

} // namespace gdl
