#pragma once

#include <cstdint>
#include <random>

namespace shiftem {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive an independent stream seed from a base seed and stream key.
/// Parallel and serial execution agree because every worker owns its stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t key) {
    return splitmix64(splitmix64(base) ^ splitmix64(key + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k1, std::uint64_t k2) {
    return derive_seed(derive_seed(base, k1), k2);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(splitmix64(seed)); }

}  // namespace shiftem
