#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace esslab {

/// Generator used for every random draw (signs, indices, uniform QAM, ASE).
using Rng = std::mt19937_64;
inline constexpr std::string_view rng_name = "std::mt19937_64";

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// FNV-1a, used to fold string labels into seeds.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Child seed: splitmix64 chained over (parent, label hash, index).
inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view label, std::uint64_t index = 0) {
    return splitmix64(splitmix64(parent ^ fnv1a(label)) ^ splitmix64(index + 1));
}

inline Rng make_rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Rng(seq);
}

} // namespace esslab
