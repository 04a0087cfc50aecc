#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <vector>

namespace tl {

inline double expit(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double clip(double x, double lo, double hi) {
  return std::min(hi, std::max(lo, x));
}

inline Eigen::VectorXd expit(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double v) { return expit(v); });
}

inline Eigen::VectorXd clip(const Eigen::VectorXd& v, double lo, double hi) {
  return v.unaryExpr([lo, hi](double x) { return clip(x, lo, hi); });
}

// Unbiased sample variance (n-1 denominator); 0 for n < 2.
inline double sample_variance(const Eigen::VectorXd& v) {
  const auto n = v.size();
  if (n < 2) return 0.0;
  double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(n - 1);
}

inline double sample_sd(const Eigen::VectorXd& v) {
  return std::sqrt(sample_variance(v));
}

// Linear-interpolation quantile (R type 7) of an unsorted sample.
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (v.size() == 1) return v[0];
  double h = q * static_cast<double>(v.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace tl
