#pragma once

#include <cstdint>
#include <random>

namespace mcbrl {

/// Every run owns one of these; streams are never shared between runs.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a list of labels.
/// Different label sequences give (with overwhelming probability) unrelated seeds.
template <typename... Labels>
constexpr std::uint64_t derive_seed(std::uint64_t parent, Labels... labels) noexcept {
    std::uint64_t h = mix64(parent);
    ((h = mix64(h ^ mix64(static_cast<std::uint64_t>(labels) + 0x632be59bd9b4e019ULL))), ...);
    return h;
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline int uniform_index(Rng& rng, int n) {
    return std::uniform_int_distribution<int>(0, n - 1)(rng);
}

} // namespace mcbrl
