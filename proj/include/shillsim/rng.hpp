#pragma once

#include <cstdint>
#include <random>

namespace shillsim {

/// SplitMix64 finalizer; used to derive well-separated seeds from
/// (seed, stream) pairs.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
}

/// Deterministic random stream identified by (seed, stream). Every trace or
/// ensemble run owns its own instance; instances are never shared between
/// threads, so results do not depend on scheduling.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream), engine_(derive_seed(seed, stream)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits. Bit-exact across
  /// standard libraries, unlike std::uniform_real_distribution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    for (;;) {
      const std::uint64_t x = engine_();
      if (x < limit) return x % n;
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

/// Reserved stream ids. Trace and ensemble-run streams use small indices,
/// so the reserved ones sit at the top of the range.
namespace streams {
inline constexpr std::uint64_t kMovieTastes = 0xffffffff00000001ULL;
inline constexpr std::uint64_t kGroundTruth = 0xffffffff00000002ULL;
inline constexpr std::uint64_t kResampling = 0xffffffff00000003ULL;
inline constexpr std::uint64_t kMhChain = 0xffffffff00000004ULL;
}  // namespace streams

}  // namespace shillsim
