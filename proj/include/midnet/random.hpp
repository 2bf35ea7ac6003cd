#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace midnet {

/// Counter-based random streams: every draw is a pure function of a seed and
/// a tuple of counters, so draws never depend on call order.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
    std::uint64_t h = splitmix64(seed);
    for (auto c : counters) h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
    return h;
}

/// Uniform in [0, 1) with 53 random bits.
inline double counter_uniform(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
    return static_cast<double>(counter_hash(seed, counters) >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two independent counter draws.
inline double counter_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c,
                             std::uint64_t d) {
    const double u1 = 1.0 - counter_uniform(seed, {a, b, c, d, 0});  // (0, 1]
    const double u2 = counter_uniform(seed, {a, b, c, d, 1});
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace midnet
