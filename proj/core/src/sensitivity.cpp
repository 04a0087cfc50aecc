#include "tl/sensitivity.hpp"

#include <algorithm>
#include <cmath>

#include "tl/error.hpp"

namespace tl {

std::vector<double> default_sensitivity_grid(double psi, double se) {
  double half = 2.0 * std::abs(psi);
  if (half <= 0.0) half = 2.0 * se;
  const int points = 41;
  std::vector<double> grid;
  grid.reserve(points);
  for (int i = 0; i < points; ++i) {
    grid.push_back(-half + 2.0 * half * static_cast<double>(i) / (points - 1));
  }
  return grid;
}

SensitivityCurve causal_gap_curve(double psi, double se, double ci_lo, double ci_hi,
                                  const std::vector<double>& grid) {
  if (!(se > 0.0)) throw ConfigError("causal_gap_curve: se must be positive");
  if (!(ci_lo <= psi && psi <= ci_hi)) {
    throw ConfigError("causal_gap_curve: interval must contain the estimate");
  }
  if (grid.empty()) throw ConfigError("causal_gap_curve: empty delta grid");

  std::vector<double> deltas = grid;
  std::sort(deltas.begin(), deltas.end());

  SensitivityCurve curve;
  curve.rows.reserve(deltas.size());
  for (double d : deltas) {
    curve.rows.push_back({d, d / se, psi - d, ci_lo - d, ci_hi - d});
  }

  // Shifted interval contains 0 exactly when delta lies in [ci_lo, ci_hi];
  // thresholds are those bounds, reported exactly rather than grid-snapped.
  if (ci_lo > 0.0) curve.threshold_significance_pos = ci_lo;
  if (ci_hi > 0.0) curve.threshold_sign_reversal_pos = ci_hi;
  if (ci_hi < 0.0) curve.threshold_significance_neg = ci_hi;
  if (ci_lo < 0.0) curve.threshold_sign_reversal_neg = ci_lo;
  return curve;
}

}  // namespace tl
