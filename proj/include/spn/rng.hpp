#pragma once

#include <cstdint>
#include <random>

namespace spn {

/// Deterministic pseudorandom stream. Wraps std::mt19937_64 but derives all
/// variates manually so results are identical across standard library
/// implementations (uniform_real_distribution et al. are not portable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

/// splitmix64 step; used to derive independent child seeds from a parent
/// seed and a branch index so recursive algorithms stay deterministic no
/// matter the traversal order.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t branch) {
  std::uint64_t z = parent + 0x9e3779b97f4a7c15ULL * (branch + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace spn
