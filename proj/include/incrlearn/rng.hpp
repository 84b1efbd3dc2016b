#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

namespace incrlearn {

/// 64-bit finalizer used by the counter-based generator below.
/// mix64(x): x ^= x>>30; x *= 0xBF58476D1CE4E5B9; x ^= x>>27;
///           x *= 0x94D049BB133111EB; x ^= x>>31.
inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

/// Derives an independent child seed from (seed, index):
///   derive_seed(seed, index) = mix64(mix64(seed) ^ mix64(index)
///                                    ^ 0x9E3779B97F4A7C15)
/// Used wherever one master seed must fan out into several streams
/// (per-epoch shuffles, per-repeat runs, sweep points).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) ^ mix64(index) ^ 0x9E3779B97F4A7C15ULL);
}

/// Counter-based pseudo-random stream, reproducible bit-for-bit from its
/// seed on any platform. The full algorithm is written out in docs/rng.md.
///
/// Draw i (zero-based) of stream with seed s is
///   u64_i = mix64(s + (i + 1) * 0x9E3779B97F4A7C15)
/// so the stream state is nothing but (seed, counter), which is what the
/// checkpoint format stores.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), counter_(0) {}
  RngStream(std::uint64_t seed, std::uint64_t counter)
      : seed_(seed), counter_(counter) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(seed_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform double in [0, 1): top 53 bits of a draw, scaled by 2^-53.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Standard normal via Box-Muller. Consumes exactly two draws:
  ///   u1 = (draw1 >> 11 + 1) * 2^-53   in (0, 1]
  ///   u2 = (draw2 >> 11) * 2^-53       in [0, 1)
  ///   z  = sqrt(-2 ln u1) * cos(2*pi*u2)
  /// The second Box-Muller value is discarded to keep the draw count
  /// a pure function of the call count.
  double next_gaussian() {
    const double u1 =
        static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n). n = 0 returns 0. Plain modulo; the bias
  /// of n / 2^64 is irrelevant at the sizes this library shuffles.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) return 0;
    return next_u64() % n;
  }

  /// Independent substream: RngStream(derive_seed(seed, index)).
  RngStream split(std::uint64_t index) const {
    return RngStream(derive_seed(seed_, index));
  }

  bool operator==(const RngStream&) const = default;

private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

/// Deterministic in-place Fisher-Yates shuffle driven by the stream:
/// for i = n-1 .. 1: j = next_below(i + 1); swap(v[i], v[j]).
template <class T>
void shuffle(std::vector<T>& v, RngStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

}  // namespace incrlearn
