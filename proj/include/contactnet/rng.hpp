#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace contactnet {

using rng_t = std::mt19937_64;

// splitmix64 finalizer; bijective on 64-bit words
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stream seed for replicate i of a run with the given master seed.
/// The map is injective in the replicate index for a fixed master seed:
/// the golden-ratio step is odd, so distinct indices give distinct inputs
/// to the bijective mixer.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t replicate) {
    return mix64(master_seed + 0x9e3779b97f4a7c15ULL * replicate);
}

// The distribution helpers below are pinned algorithms (not std::
// distributions, whose output sequences are implementation defined), so a
// seed fully determines every simulation on any platform.

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(rng_t& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Exponential waiting time with the given rate.
inline double exp_sample(rng_t& rng, double rate) {
    return -std::log1p(-uniform01(rng)) / rate;
}

/// Unbiased uniform integer in [0, n). Lemire's multiply-shift with rejection.
inline std::uint64_t pick_below(rng_t& rng, std::uint64_t n) {
    std::uint64_t x = rng();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
        const std::uint64_t threshold = -n % n;
        while (lo < threshold) {
            x = rng();
            m = static_cast<__uint128_t>(x) * n;
            lo = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

/// Number of failures before the first success: P(N = j) = (1-p)^j p, j >= 0.
inline std::int64_t shifted_geometric(rng_t& rng, double success) {
    const double u = 1.0 - uniform01(rng);  // in (0, 1]
    if (success >= 1.0) return 0;
    return static_cast<std::int64_t>(std::floor(std::log(u) / std::log1p(-success)));
}

}  // namespace contactnet
