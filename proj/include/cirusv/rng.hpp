#pragma once

#include <cstdint>

namespace cirusv {

/// Counter-based Gaussian stream: every draw is a pure function of
/// (seed, path, step, component), so simulations are reproducible
/// independent of execution order and thread count.
namespace rng {

/// SplitMix64 finalizer; bijective with strong avalanche.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

/// Hash of the full counter tuple.
constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                                     std::uint64_t component) {
    std::uint64_t h = mix64(seed ^ 0x9e3779b97f4a7c15ULL);
    h = mix64(h ^ path);
    h = mix64(h ^ step);
    h = mix64(h ^ component);
    return h;
}

/// Uniform in the open interval (0, 1) from 52 high bits; the extremes
/// 2^-53 and 1 - 2^-53 are exactly representable, so neither endpoint
/// can round onto 0 or 1.
constexpr double uniform_open01(std::uint64_t h) {
    return (static_cast<double>(h >> 12) + 0.5) * 0x1.0p-52;
}

/// Inverse of the standard normal CDF (Wichura's PPND16 rational
/// approximations, |error| < 1e-15 over (0,1)).
double inv_normal_cdf(double p);

/// One N(0,1) variate for the counter tuple.
inline double normal_draw(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                          std::uint64_t component) {
    return inv_normal_cdf(uniform_open01(counter_hash(seed, path, step, component)));
}

}  // namespace rng
}  // namespace cirusv
