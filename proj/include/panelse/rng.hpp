#pragma once

#include <cstdint>
#include <random>

namespace panelse::rng {

/// splitmix64 finalizer; full-avalanche mix of a 64-bit word.
inline std::uint64_t avalanche(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// Deterministic combination of two 64-bit words into a fresh seed.
inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return avalanche(a + 0x9e3779b97f4a7c15ULL * (b + 1));
}

/// Seeded stream of standard draws. Each stream is independent by seed
/// derivation; the generator itself is an implementation detail.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : eng_(seed) {}

  double normal() { return normal_(eng_); }

  double uniform(double lo, double hi) {
    if (lo == hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Replication seed = mix(base_seed, replication index).
inline std::uint64_t replication_seed(std::uint64_t base_seed, std::uint64_t rep) {
  return mix(base_seed, rep);
}

/// Fixed substream tags: regressors=1, errors=2, fixed effects=3.
enum class StreamTag : std::uint64_t {
  Regressors = 1,
  Errors = 2,
  FixedEffects = 3,
};

inline Stream substream(std::uint64_t rep_seed, StreamTag tag) {
  return Stream(mix(rep_seed, static_cast<std::uint64_t>(tag)));
}

}  // namespace panelse::rng
