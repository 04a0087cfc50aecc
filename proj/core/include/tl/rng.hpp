#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace tl {

// Seedable generator used everywhere randomness is needed. The engine is
// std::mt19937_64 (fully specified by the standard); all variate transforms
// are written out here rather than delegated to std::*_distribution, whose
// output differs across standard library implementations.
//
// Stream rule for replicated experiments: replicate i uses seed
// base_seed + i (0-based), one fresh Rng per replicate.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1), 53-bit resolution. Never returns 1.0.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller, cosine branch; consumes exactly two uniforms per call.
  double normal(double mu = 0.0, double sd = 1.0) {
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mu + sd * r * std::cos(2.0 * M_PI * u2);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform integer in [0, n), n >= 1.
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(uniform01() * static_cast<double>(n));
  }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tl
