#pragma once

// Counter-based pseudo random numbers.  Draw i of a stream seeded with s is
// splitmix64(s + (i + 1) * 0x9E3779B97F4A7C15), so any draw can be recomputed
// from (seed, counter) alone and results never depend on a global state or on
// the standard library's distribution implementations.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace heisvisc {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(splitmix64(seed ^ splitmix64(stream))) {}

    std::uint64_t next_u64() { return splitmix64(seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) { return bound == 0 ? 0 : next_u64() % bound; }

    /// Standard normal via Box-Muller (one draw per call).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace heisvisc
