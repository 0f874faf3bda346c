#pragma once

#include <cstdint>
#include <vector>

namespace evaltk {

/// Seedable generator used for every randomized path in the library.
///
/// SplitMix64 (Steele, Lea, Flood 2014). Its output is fully pinned down
/// by the algorithm: the same seed produces the same stream on every
/// platform and standard library, so seeded runs are byte-reproducible.
/// std::uniform_*_distribution is implementation-defined and must not be
/// used with this generator.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 random mantissa bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). Rejection sampling, so unbiased and
  /// portable. bound must be positive.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  /// Independent substream derived from the current state. Trials that
  /// fork per-index substreams get the same results no matter how the
  /// trial loop is ordered or parallelized.
  SplitMix64 fork(std::uint64_t stream) const {
    SplitMix64 g(state_ ^ (0x632be59bd9b4e019ULL * (stream + 1)));
    g.next_u64();
    return g;
  }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace evaltk
