#pragma once

#include <cstdint>
#include <random>

namespace avdeploy {

using Rng = std::mt19937_64;

/// splitmix64 finalizer used to derive sub-stream seeds from a master seed.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of a named sub-stream. The same (seed, stream) pair always yields the
/// same value, and distinct streams are independent for simulation purposes.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(seed ^ mix64(stream));
}

// All stream ids used by the run and bench layers live here so the splitting
// scheme is auditable in one place. Toggling one stochastic component must not
// perturb the draws of another.
namespace seed_stream {
inline constexpr std::uint64_t world = 1;
inline constexpr std::uint64_t init = 2;
inline constexpr std::uint64_t observe = 3;
inline constexpr std::uint64_t tie_break = 4;
inline constexpr std::uint64_t restart = 5;
inline constexpr std::uint64_t random_select = 6;
inline constexpr std::uint64_t bench_accelerated = 7;
inline constexpr std::uint64_t bench_random = 8;
}  // namespace seed_stream

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

}  // namespace avdeploy
