#pragma once

#include <cstdint>
#include <random>

namespace critnet {

/// Seeded random source used everywhere in the library.
///
/// Thin wrapper around std::mt19937_64 with bounded-draw helpers, so that a
/// simulation consumes one well-defined stream: identical seed plus identical
/// call sequence reproduces identical draws.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be > 0.
    /// Rejection sampling keeps the draw exactly uniform.
    std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [0, scale).
    double uniform_scaled(double scale) { return uniform01() * scale; }

    bool bernoulli(double p) { return uniform01() < p; }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace critnet
