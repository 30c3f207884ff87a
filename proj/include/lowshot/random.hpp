#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>

namespace lowshot {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a list of integers into one seed, order-sensitive. Used to give every
/// consumer (epoch shuffles, support draws, augmentations) an independent stream.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t key = mix64(seed);
  for (std::uint64_t t : tags) key = mix64(key ^ mix64(t + 0x632be59bd9b4e019ULL));
  return key;
}

/// Counter-based generator: the i-th output is mix64(key + i * golden), so a
/// stream is fully described by (seed, counter) and is identical on every
/// platform. All distributions below are implemented here instead of using
/// <random> distributions, whose outputs are implementation-defined.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept : key_(mix64(seed ^ 0xd1b54a32d192ed03ULL)) {}

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n). Rejection sampling, no modulo bias.
  std::size_t below(std::size_t n) noexcept;

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lowshot
