#pragma once

#include <cstdint>
#include <random>

namespace stochcrf {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream for (seed, stream) so work split across threads draws
// the same numbers as a serial run.
inline Rng derived_rng(std::uint64_t seed, std::uint64_t stream) {
    return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

// U(0,1) open at zero: the indicator F >= gamma * U is never satisfied by F = 0.
inline double uniform_open01(Rng& rng) {
    // 53 random bits, shifted by half an ulp away from zero.
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace stochcrf
