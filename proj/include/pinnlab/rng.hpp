#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pinnlab {

// Bit-reproducible draws on top of mt19937_64. std::uniform_real_distribution
// and friends are implementation-defined, so the mappings live here instead.

// Uniform on [0, 1): 53 random bits scaled by 2^-53.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on (0, 1): shifts the [0,1) lattice by half a step so 0 is excluded.
inline double uniform_open01(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Standard normal pair via Box-Muller; both values from one (u, v) draw.
struct NormalPair {
    double first, second;
};

inline NormalPair normal_pair(std::mt19937_64& rng) {
    double u = uniform_open01(rng);
    double v = uniform_open01(rng);
    double r = std::sqrt(-2.0 * std::log(u));
    double a = 2.0 * 3.141592653589793238462643383279502884 * v;
    return {r * std::cos(a), r * std::sin(a)};
}

// splitmix64 finalizer; decorrelates derived streams from structured inputs.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    return mix64(mix64(base) ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag_a, std::uint64_t tag_b) {
    return derive_seed(derive_seed(base, tag_a), tag_b);
}

}  // namespace pinnlab
