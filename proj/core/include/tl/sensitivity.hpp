#pragma once

#include <optional>
#include <vector>

namespace tl {

// Causal-gap sensitivity: the point estimate and both interval bounds shift
// left by delta; thresholds are the exact interval bounds at which the
// substantive conclusion changes.
struct SensitivityRow {
  double delta = 0.0;
  double delta_se_units = 0.0;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct SensitivityCurve {
  std::vector<SensitivityRow> rows;  // ordered by delta
  // Positive-gap thresholds (psi estimated above 0): smallest delta > 0 that
  // nullifies significance, and smallest delta > 0 that flips the sign of
  // the whole interval.
  std::optional<double> threshold_significance_pos;
  std::optional<double> threshold_sign_reversal_pos;
  // Mirrored thresholds for negative gaps (psi estimated below 0).
  std::optional<double> threshold_significance_neg;
  std::optional<double> threshold_sign_reversal_neg;
};

SensitivityCurve causal_gap_curve(double psi, double se, double ci_lo, double ci_hi,
                                  const std::vector<double>& grid);

// 41 points spanning +/- 2|psi| (falls back to +/- 2 se when psi is 0).
std::vector<double> default_sensitivity_grid(double psi, double se);

}  // namespace tl
