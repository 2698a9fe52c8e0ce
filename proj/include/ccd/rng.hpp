#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ccd {

using Rng = std::mt19937_64;

/// splitmix64 finaliser; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Folds a list of tags into a seed. derive_seed(s, {a, b}) is stable across
/// platforms, so every stream in an experiment is reproducible from one master.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t h = mix64(base);
    for (auto t : tags) h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
    return h;
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Uniform index in [0, n). n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double normal(Rng& rng, double mean, double sd) {
    return std::normal_distribution<double>(mean, sd)(rng);
}

// Stream tags for derive_seed.
namespace stream {
inline constexpr std::uint64_t kObservational = 0x0b5;
inline constexpr std::uint64_t kObjective = 0x0b1;
inline constexpr std::uint64_t kOptimizer = 0x097;
inline constexpr std::uint64_t kPrior = 0x9e1;
inline constexpr std::uint64_t kOracle = 0x0ac;
inline constexpr std::uint64_t kRollout = 0x2011;
}  // namespace stream

}  // namespace ccd
