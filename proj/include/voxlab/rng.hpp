#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace voxlab {

// Every stochastic operation draws from an explicitly passed engine.
using Rng = std::mt19937_64;

// SplitMix64 finalizer; a stable, well-mixed 64-bit hash.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed for a sub-stream keyed by (base seed, key). Used for per-morphology
// and per-repetition streams so that work partitioning never changes results.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t key) noexcept {
    return mix64(mix64(base) ^ (key * 0xD6E8FEB86659FD93ULL));
}

inline std::string rng_state(const Rng& rng) {
    std::ostringstream out;
    out << rng;
    return out.str();
}

inline void restore_rng_state(Rng& rng, const std::string& state) {
    std::istringstream in(state);
    in >> rng;
}

// FNV-1a over bytes; stamps configuration text.
constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace voxlab
