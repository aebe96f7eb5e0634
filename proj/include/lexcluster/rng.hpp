#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace lexcluster {

/// Seeded PRNG with portable derived draws.
///
/// The engine sequence of std::mt19937_64 is fixed by the standard, but the
/// std:: distributions are not, so uniform integers and reals are derived
/// here by hand. Every randomized operation in the library takes one of these
/// (or a seed that builds one) so results are pure functions of the seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  /// Uniform real in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Fixed per-stage seed offsets used by the CLI seed discipline.
namespace seed_offset {
inline constexpr std::uint64_t split = 1;
inline constexpr std::uint64_t subsample = 2;
inline constexpr std::uint64_t embed = 3;
inline constexpr std::uint64_t kmeans = 4;
inline constexpr std::uint64_t experiment = 5;
inline constexpr std::uint64_t synthetic = 6;
}  // namespace seed_offset

}  // namespace lexcluster
