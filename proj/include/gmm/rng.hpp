#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "gmm/error.hpp"

namespace gmm {

// mt19937_64 produces the same stream on every platform; the helpers below
// avoid std::*_distribution, whose output is implementation-defined.
using rng_engine = std::mt19937_64;

inline rng_engine make_rng(std::uint64_t seed) { return rng_engine(seed); }

/// Unbiased integer in [0, n). n must be >= 1.
inline std::uint64_t uniform_below(rng_engine& rng, std::uint64_t n) {
    if (n == 0) throw domain_error("uniform_below: n must be >= 1");
    // rejection below 2^64 mod n keeps the draw unbiased
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = rng();
        if (r >= threshold) return r % n;
    }
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_real(rng_engine& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_real(rng_engine& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_real(rng);
}

/// Standard normal via Box-Muller. Two engine draws per value.
inline double gaussian(rng_engine& rng) {
    double u1 = uniform_real(rng);
    const double u2 = uniform_real(rng);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

/// k distinct indices drawn uniformly from [0, population), returned sorted.
inline std::vector<std::size_t> sample_without_replacement(rng_engine& rng,
                                                           std::size_t population,
                                                           std::size_t k) {
    if (k > population) throw domain_error("sample_without_replacement: k exceeds population");
    std::vector<std::size_t> pool(population);
    for (std::size_t i = 0; i < population; ++i) pool[i] = i;
    // partial Fisher-Yates: the first k slots end up a uniform subset
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, population - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace gmm
