#pragma once

#include <cstdint>
#include <random>

namespace seqread {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent per-cell / per-run seeds
/// so that parallel work is reproducible regardless of scheduling.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    return mix_seed(mix_seed(mix_seed(seed) ^ stream) ^ index);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    return Rng(derive_seed(seed, stream, index));
}

}  // namespace seqread
