#ifndef INTENTSIEVE_RNG_HPP
#define INTENTSIEVE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace isv {

/// Seed wrapper: the same seed reproduces every initialization, shuffle and
/// dropout mask bit-for-bit.
struct RngSeed {
  std::uint64_t value = 0;
};

/// Deterministic random source. All transforms (uniform, normal, bounded
/// ints) are implemented here rather than with std distributions, whose
/// output is implementation-defined and would break cross-toolchain
/// reproducibility of checkpoints.
class Rng {
 public:
  explicit Rng(RngSeed seed) : engine_(seed.value) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, n) by rejection sampling (unbiased).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  /// In-place Fisher-Yates shuffle.
  template <typename Vec>
  void shuffle(Vec& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Derive an independent stream for a named purpose (init, dropout,
  /// shuffle, ...) so adding a consumer does not shift the others.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream_tag) {
    // splitmix64 over seed ^ tag
    std::uint64_t z = seed ^ (stream_tag * 0x9E3779B97F4A7C15ULL);
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace isv

#endif  // INTENTSIEVE_RNG_HPP
