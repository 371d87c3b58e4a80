#pragma once

#include <cstdint>
#include <vector>

namespace homnet {

// SplitMix64: state advances by a fixed odd increment, output is a bijective mix
// of the state. Draw helpers below fix the exact derivation of every value so
// that generated data is reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  // Uniform on [0, n) by rejection; n > 0.
  std::uint64_t below(std::uint64_t n);
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }

  // Fisher-Yates, swapping i with below(i + 1) for i descending.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derives an independent stream.
  Rng split() { return Rng(next()); }

 private:
  std::uint64_t state_;
};

}  // namespace homnet
