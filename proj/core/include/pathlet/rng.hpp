#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace pathlet {

/// Seeded random source.
///
/// The engine is mt19937_64 and the uniform/normal transforms are written out
/// here rather than taken from <random> distributions, so a given seed yields
/// the same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Independent stream for a named component, e.g. derive(seed, "rounding").
  static Rng derive(std::uint64_t seed, std::string_view component);
  /// Independent stream for item `index` of a component (per-sample streams).
  static Rng derive(std::uint64_t seed, std::string_view component, std::uint64_t index);

  std::uint64_t next_u64();
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal draw (Box-Muller, second value cached).
  double normal();
  bool bernoulli(double p);
  /// Uniform integer in [0, n); n must be positive.
  std::size_t uniform_index(std::size_t n);
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// splitmix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix_seed(std::uint64_t x);
/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace pathlet
