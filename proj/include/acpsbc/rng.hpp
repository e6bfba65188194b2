#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

namespace acpsbc {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Named, seeded random stream (xoshiro256**). Stream state is derived from
/// hash(master_seed, name), so every stream is independent of how many other
/// streams exist: adding robots never perturbs the draws of existing ones.
///
/// All distributions are generated from raw 64-bit output with fixed
/// arithmetic (no std::*_distribution), so sequences are stable across
/// standard libraries and builds.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::string_view name) {
        std::uint64_t seed = fnv1a64(name) ^ (master_seed * 0x9e3779b97f4a7c15ULL);
        for (auto& word : state_) word = splitmix64_next(seed);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller; consumes exactly two uniforms per draw
    /// (no cached spare), so the consumption pattern is easy to reason about.
    double normal() {
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform index in [0, n).
    std::size_t pick(std::size_t n) {
        return std::min<std::size_t>(n - 1, static_cast<std::size_t>(uniform01() * static_cast<double>(n)));
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4]{};
};

}  // namespace acpsbc
