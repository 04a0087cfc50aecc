#include <doctest.h>

#include <cmath>

#include "tl/error.hpp"
#include "tl/sensitivity.hpp"

using namespace tl;

// The running example uses the headline analysis numbers: estimate 0.21,
// SE 0.062, interval [0.09, 0.33].
namespace {
constexpr double kPsi = 0.21;
constexpr double kSe = 0.062;
constexpr double kLo = 0.09;
constexpr double kHi = 0.33;
}  // namespace

TEST_CASE("a zero gap reproduces the unshifted result") {
  SensitivityCurve c = causal_gap_curve(kPsi, kSe, kLo, kHi, {0.0});
  REQUIRE(c.rows.size() == 1);
  CHECK(c.rows[0].estimate == kPsi);
  CHECK(c.rows[0].lower == kLo);
  CHECK(c.rows[0].upper == kHi);
  CHECK(c.rows[0].delta_se_units == 0.0);
}

TEST_CASE("thresholds are the exact interval bounds") {
  SensitivityCurve c = causal_gap_curve(kPsi, kSe, kLo, kHi, default_sensitivity_grid(kPsi, kSe));
  REQUIRE(c.threshold_significance_pos.has_value());
  REQUIRE(c.threshold_sign_reversal_pos.has_value());
  CHECK(*c.threshold_significance_pos == kLo);   // ~0.1 loses significance
  CHECK(*c.threshold_sign_reversal_pos == kHi);  // > 0.325 flips the sign
  CHECK_FALSE(c.threshold_significance_neg.has_value());
  CHECK_FALSE(c.threshold_sign_reversal_neg.has_value());
}

TEST_CASE("one-SE gap shifts the estimate by one SE unit") {
  SensitivityCurve c = causal_gap_curve(kPsi, kSe, kLo, kHi, {kSe});
  CHECK(c.rows[0].estimate == doctest::Approx(0.148).epsilon(1e-12));
  CHECK(c.rows[0].delta_se_units == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("shift linearity composes") {
  double d1 = 0.05, d2 = 0.08;
  SensitivityCurve once = causal_gap_curve(kPsi, kSe, kLo, kHi, {d1 + d2});
  SensitivityCurve first = causal_gap_curve(kPsi, kSe, kLo, kHi, {d1});
  SensitivityCurve second = causal_gap_curve(first.rows[0].estimate, kSe, first.rows[0].lower,
                                             first.rows[0].upper, {d2});
  CHECK(once.rows[0].estimate == doctest::Approx(second.rows[0].estimate).epsilon(1e-14));
  CHECK(once.rows[0].lower == doctest::Approx(second.rows[0].lower).epsilon(1e-14));
  CHECK(once.rows[0].upper == doctest::Approx(second.rows[0].upper).epsilon(1e-14));
}

TEST_CASE("interval width is preserved across the grid") {
  SensitivityCurve c = causal_gap_curve(kPsi, kSe, kLo, kHi, default_sensitivity_grid(kPsi, kSe));
  double width = kHi - kLo;
  for (const auto& row : c.rows) {
    CHECK(std::abs((row.upper - row.lower) - width) < 1e-12);
  }
}

TEST_CASE("rows are ordered by delta and consistent at the thresholds") {
  SensitivityCurve c = causal_gap_curve(kPsi, kSe, kLo, kHi, default_sensitivity_grid(kPsi, kSe));
  for (std::size_t i = 1; i < c.rows.size(); ++i) {
    CHECK(c.rows[i].delta > c.rows[i - 1].delta);
  }
  // At or above the significance threshold the shifted lower bound is <= 0;
  // just below it stays positive.
  for (const auto& row : c.rows) {
    if (row.delta >= *c.threshold_significance_pos) {
      CHECK(row.lower <= 1e-12);
    } else if (row.delta > 0.0) {
      CHECK(row.lower > 0.0);
    }
  }
}

TEST_CASE("default grid covers twice the estimate on both sides") {
  std::vector<double> grid = default_sensitivity_grid(kPsi, kSe);
  REQUIRE(grid.size() == 41);
  CHECK(grid.front() == doctest::Approx(-0.42));
  CHECK(grid.back() == doctest::Approx(0.42));
  CHECK(grid.back() > 0.325);  // the sign-reversal point is inside the span
}

TEST_CASE("negative estimates mirror the thresholds") {
  SensitivityCurve c = causal_gap_curve(-kPsi, kSe, -kHi, -kLo,
                                        default_sensitivity_grid(-kPsi, kSe));
  CHECK_FALSE(c.threshold_significance_pos.has_value());
  CHECK_FALSE(c.threshold_sign_reversal_pos.has_value());
  REQUIRE(c.threshold_significance_neg.has_value());
  REQUIRE(c.threshold_sign_reversal_neg.has_value());
  CHECK(*c.threshold_significance_neg == -kLo);
  CHECK(*c.threshold_sign_reversal_neg == -kHi);
}

TEST_CASE("a straddling interval has a reversal threshold but no significance one") {
  SensitivityCurve c = causal_gap_curve(0.02, 0.05, -0.08, 0.12, {0.0, 0.1});
  CHECK_FALSE(c.threshold_significance_pos.has_value());  // already non-significant
  CHECK(c.threshold_sign_reversal_pos == 0.12);
  CHECK(c.threshold_sign_reversal_neg == -0.08);
}

TEST_CASE("precondition violations throw") {
  CHECK_THROWS_AS(causal_gap_curve(kPsi, 0.0, kLo, kHi, {0.0}), ConfigError);
  CHECK_THROWS_AS(causal_gap_curve(kPsi, kSe, 0.3, 0.4, {0.0}), ConfigError);  // psi outside
  CHECK_THROWS_AS(causal_gap_curve(kPsi, kSe, kLo, kHi, {}), ConfigError);
}
