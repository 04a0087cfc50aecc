#include <doctest.h>

#include <cmath>
#include <map>

#include "test_helpers.hpp"
#include "tl/math.hpp"
#include "tl/rng.hpp"
#include "tl/sim.hpp"
#include "tl/tmle.hpp"

using namespace tl;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("truncation_bound follows 5/(sqrt(n) ln n)") {
  CHECK(truncation_bound(225) ==
        doctest::Approx(5.0 / (15.0 * std::log(225.0))).epsilon(1e-14));
  CHECK(truncation_bound(225) == doctest::Approx(0.06155).epsilon(0.01));  // rounds to 0.06
  CHECK(truncation_bound(100) == doctest::Approx(5.0 / (10.0 * std::log(100.0))).epsilon(1e-14));
  CHECK(truncation_bound(100) == doctest::Approx(0.10857).epsilon(1e-4));
  CHECK_THROWS_AS(truncation_bound(1), ConfigError);
}

TEST_CASE("resolve_g_bound demands an override for degenerate n") {
  CHECK(truncation_bound(8) >= 0.5);
  CHECK_THROWS_WITH_AS(resolve_g_bound(8, std::nullopt), doctest::Contains("explicit"),
                       ConfigError);
  CHECK(resolve_g_bound(8, 0.0) == 0.0);
  CHECK(resolve_g_bound(225, std::nullopt) == doctest::Approx(0.0615449).epsilon(1e-4));
  CHECK_THROWS_AS(resolve_g_bound(225, 0.7), ConfigError);
}

TEST_CASE("clever covariates at the definition points") {
  VectorXd A(3), g(3);
  A << 1, 0, 1;
  g << 0.5, 0.25, 0.06;
  auto [h1, h0] = clever_covariates(A, g);
  CHECK(h1(0) == doctest::Approx(2.0));
  CHECK(h0(0) == 0.0);
  CHECK(h1(1) == 0.0);
  CHECK(h0(1) == doctest::Approx(-4.0 / 3.0));
  CHECK(h1(2) == doctest::Approx(1.0 / 0.06));  // ~16.67: the bound caps the weight
  VectorXd bad(1), a1(1);
  bad << 1.0;
  a1 << 1.0;
  CHECK_THROWS_AS(clever_covariates(a1, bad), EstimationError);
}

TEST_CASE("monotone truncation: a larger bound never increases the weights") {
  Rng rng(3);
  int n = 200;
  VectorXd A(n), g_raw(n);
  for (int i = 0; i < n; ++i) {
    g_raw(i) = clip(rng.uniform01(), 0.001, 0.999);
    A(i) = rng.bernoulli(g_raw(i)) ? 1.0 : 0.0;
  }
  double prev_h1 = std::numeric_limits<double>::infinity();
  double prev_h0 = std::numeric_limits<double>::infinity();
  for (double bound : {0.01, 0.05, 0.1, 0.2}) {
    VectorXd g = clip(g_raw, bound, 1.0 - bound);
    auto [h1, h0] = clever_covariates(A, g);
    double max_h1 = h1.cwiseAbs().maxCoeff();
    double max_h0 = h0.cwiseAbs().maxCoeff();
    CHECK(max_h1 <= prev_h1 + 1e-12);
    CHECK(max_h0 <= prev_h0 + 1e-12);
    prev_h1 = max_h1;
    prev_h0 = max_h0;
  }
}

namespace {

// 16-row cohort with interior stratum means: within every (A, W) cell the
// outcome mean lies strictly inside (0, 1), and g(W) = 1/2 exactly.
struct InteriorFixture {
  VectorXd y, a, q_init, h1, h0;
};

InteriorFixture interior_fixture() {
  // Cells of 4: (A=1,W=0) mean 1/4; (A=0,W=0) mean 1/2;
  //             (A=1,W=1) mean 3/4; (A=0,W=1) mean 1/2.
  const double cells[4][3] = {{1, 0, 0.25}, {0, 0, 0.5}, {1, 1, 0.75}, {0, 1, 0.5}};
  InteriorFixture f;
  f.y.resize(16);
  f.a.resize(16);
  f.q_init.resize(16);
  int at = 0;
  for (const auto& cell : cells) {
    int events = static_cast<int>(cell[2] * 4.0);
    for (int k = 0; k < 4; ++k, ++at) {
      f.a(at) = cell[0];
      f.y(at) = k < events ? 1.0 : 0.0;
      f.q_init(at) = cell[2];  // exact stratum mean
    }
  }
  VectorXd g = VectorXd::Constant(16, 0.5);
  auto [h1, h0] = clever_covariates(f.a, g);
  f.h1 = h1;
  f.h0 = h0;
  return f;
}

double fluctuation_score(const VectorXd& q_init, const Fluctuation& fl, const VectorXd& h1,
                         const VectorXd& h0, const VectorXd& y, bool treated_side) {
  double score = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double p = expit(logit(q_init(i)) + fl.eps1 * h1(i) + fl.eps0 * h0(i));
    score += (treated_side ? h1(i) : h0(i)) * (y(i) - p);
  }
  return score;
}

}  // namespace

TEST_CASE("fluctuate returns zero at the nonparametric stratum means") {
  InteriorFixture f = interior_fixture();
  Fluctuation fl = fluctuate(f.q_init, f.h1, f.h0, f.y);
  CHECK(fl.converged);
  CHECK(std::abs(fl.eps0) < 1e-8);
  CHECK(std::abs(fl.eps1) < 1e-8);
}

TEST_CASE("fluctuate is near zero when the initial fit matches the outcomes") {
  // Both outcome values occur inside each arm, so the perfect-fit score
  // cancels exactly within arms.
  VectorXd y(8), a(8), q(8);
  y << 1, 0, 1, 0, 1, 0, 1, 0;
  a << 1, 1, 1, 1, 0, 0, 0, 0;
  for (int i = 0; i < 8; ++i) q(i) = y(i) == 1.0 ? 0.999 : 0.001;
  VectorXd g = VectorXd::Constant(8, 0.5);
  auto [h1, h0] = clever_covariates(a, g);
  Fluctuation fl = fluctuate(q, h1, h0, y);
  CHECK(std::abs(fl.eps0) < 1e-8);
  CHECK(std::abs(fl.eps1) < 1e-8);
}

TEST_CASE("fluctuate moves a misspecified initial fit and zeroes the score") {
  Dataset ds = generate(dgp_a(), 500, 11);
  VectorXd y = ds.numeric("Y"), a = ds.numeric("A");
  VectorXd q_init = VectorXd::Constant(500, 0.5);  // deliberately wrong

  // True propensity, evaluated through the DGP itself.
  DgpSpec dgp = dgp_a();
  VectorXd g(500);
  for (int i = 0; i < 500; ++i) {
    std::map<std::string, double> row = {{"w1", ds.numeric("w1")(i)},
                                         {"w2", ds.numeric("w2")(i)},
                                         {"w3", ds.numeric("w3")(i)}};
    g(i) = dgp.treatment_model.prob_at(row);
  }
  auto [h1, h0] = clever_covariates(a, g);
  Fluctuation fl = fluctuate(q_init, h1, h0, y);
  CHECK(fl.converged);
  CHECK(std::abs(fl.eps1) > 1e-3);  // the update must actually move
  CHECK(std::abs(fluctuation_score(q_init, fl, h1, h0, y, true)) < 1e-8);
  CHECK(std::abs(fluctuation_score(q_init, fl, h1, h0, y, false)) < 1e-8);
}

TEST_CASE("fluctuate rejects initial predictions outside (0,1)") {
  VectorXd q(2), h1(2), h0(2), y(2);
  q << 0.5, 1.0;
  h1 << 1, 0;
  h0 << 0, -1;
  y << 1, 0;
  CHECK_THROWS_AS(fluctuate(q, h1, h0, y), EstimationError);
}

namespace {

NuisanceFits synthetic_nuisances(const VectorXd& y, const VectorXd& a, const VectorXd& q1,
                                 const VectorXd& q0, const VectorXd& g) {
  NuisanceFits nf;
  nf.y = y;
  nf.a = a;
  nf.q1 = q1;
  nf.q0 = q0;
  nf.q_obs.resize(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) nf.q_obs(i) = a(i) == 1.0 ? q1(i) : q0(i);
  nf.g_raw = g;
  nf.g = g;
  nf.g_bound = 0.0;
  return nf;
}

}  // namespace

TEST_CASE("null effect: identical arms give RD 0, RR 1, OR 1") {
  Rng rng(5);
  int n = 50;
  VectorXd y(n), a(n), q(n);
  for (int i = 0; i < n; ++i) {
    y(i) = rng.bernoulli(0.3) ? 1.0 : 0.0;
    a(i) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    q(i) = clip(0.3 + 0.1 * rng.normal(), 0.05, 0.95);
  }
  NuisanceFits nf = synthetic_nuisances(y, a, q, q, VectorXd::Constant(n, 0.5));
  TmleResult r = tmle_estimate(nf, Fluctuation{0.0, 0.0, true});
  CHECK(r.psi_rd == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(*r.psi_rr == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(*r.psi_or == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("ratio estimands are reported absent when mu0 vanishes") {
  VectorXd y(4), a(4);
  y << 0, 0, 1, 0;
  a << 0, 0, 1, 1;
  VectorXd q1 = VectorXd::Constant(4, 0.4);
  VectorXd q0 = VectorXd::Constant(4, 1e-13);
  NuisanceFits nf = synthetic_nuisances(y, a, q1, q0, VectorXd::Constant(4, 0.5));
  TmleResult r = tmle_estimate(nf, Fluctuation{0.0, 0.0, true});
  CHECK_FALSE(r.psi_rr.has_value());
  CHECK_FALSE(r.psi_or.has_value());
  CHECK(r.psi_rd == doctest::Approx(0.4).epsilon(1e-6));
}

namespace {

NuisanceOptions e8_options() {
  NuisanceOptions opt;
  opt.q_library = {LearnerSpec::make(LearnerKind::logistic)};
  opt.g_library = {LearnerSpec::make(LearnerKind::logistic)};
  opt.adjustment = {"W"};
  opt.V = 2;
  opt.seed = 1;
  opt.g_bound = 0.0;  // truncation disabled
  return opt;
}

}  // namespace

TEST_CASE("E8 saturated equivalence: TMLE = gcomp = stratified = 1/2") {
  Dataset ds = e8_dataset();
  CHECK(e8_stratified_rd() == doctest::Approx(0.5).epsilon(1e-15));

  NuisanceFits nf;
  TmleResult r = run_tmle(ds, e8_options(), &nf);
  CHECK(std::abs(r.psi_rd - 0.5) < 1e-10);
  CHECK(std::abs(r.gcomp_rd - 0.5) < 1e-10);
  CHECK(std::abs(r.ic_mean_rd) < 1e-8);
  CHECK(nf.truncation_count == 0);

  // Saturated g: the treatment rate is exactly 1/2 in both strata.
  for (Eigen::Index i = 0; i < nf.g.size(); ++i) {
    CHECK(nf.g(i) == doctest::Approx(0.5).epsilon(1e-9));
  }
}

TEST_CASE("relabeling the arms negates RD and inverts RR") {
  Dataset ds = generate(dgp_a(), 250, 21);

  // Flip A -> 1-A.
  std::vector<Column> cols;
  for (const auto& c : ds.columns()) {
    Column nc = c;
    if (c.spec.role == Role::treatment) {
      for (auto& v : nc.values) v = 1.0 - v;
    }
    cols.push_back(std::move(nc));
  }
  Dataset flipped(std::move(cols), ds.n());

  NuisanceOptions opt;
  opt.q_library = {LearnerSpec::make(LearnerKind::logistic)};
  opt.g_library = {LearnerSpec::make(LearnerKind::logistic)};
  opt.adjustment = {"w1", "w2", "w3"};
  opt.V = 5;
  opt.seed = 7;
  opt.g_bound = 0.0;

  TmleResult r = run_tmle(ds, opt);
  TmleResult rf = run_tmle(flipped, opt);
  CHECK(std::abs(r.psi_rd + rf.psi_rd) < 1e-10);
  REQUIRE(r.psi_rr.has_value());
  REQUIRE(rf.psi_rr.has_value());
  CHECK(std::abs(*r.psi_rr - 1.0 / *rf.psi_rr) < 1e-10);
}

TEST_CASE("gcomp of a constant initial fit is zero") {
  VectorXd q = VectorXd::Constant(10, 0.37);
  CHECK(gcomp_estimate(q, q) == 0.0);
}

TEST_CASE("TMLE on a DGP-A sample lands within three SEs of the oracle") {
  OracleEstimand oracle = true_psi(dgp_a(), 200000, 7);
  Dataset ds = generate(dgp_a(), 2000, 3);

  NuisanceOptions opt;
  opt.q_library = {LearnerSpec::make(LearnerKind::logistic)};
  opt.g_library = {LearnerSpec::make(LearnerKind::logistic)};
  opt.adjustment = {"w1", "w2", "w3"};
  opt.q_interactions = {"w1"};
  opt.V = 10;
  opt.seed = 3;

  TmleResult r = run_tmle(ds, opt);
  CHECK(std::abs(r.psi_rd - oracle.rd) < 3.0 * r.se_rd);
  CHECK(std::abs(r.ic_mean_rd) < 1e-8);
  CHECK(r.ci_rd_lo < r.psi_rd);
  CHECK(r.ci_rd_hi > r.psi_rd);
  CHECK(r.se_rd > 0.0);
  // RD/RR/OR identities against mu1, mu0.
  CHECK(r.psi_rd == doctest::Approx(r.mu1 - r.mu0).epsilon(1e-12));
  CHECK(*r.psi_rr == doctest::Approx(r.mu1 / r.mu0).epsilon(1e-12));
  CHECK(*r.psi_or ==
        doctest::Approx((r.mu1 / (1 - r.mu1)) / (r.mu0 / (1 - r.mu0))).epsilon(1e-12));
}

TEST_CASE("fit_nuisances counts truncated propensities and honors bounds") {
  Dataset ds = generate(dgp_a(), 400, 9);
  NuisanceOptions opt;
  opt.q_library = {LearnerSpec::make(LearnerKind::logistic)};
  opt.g_library = {LearnerSpec::make(LearnerKind::logistic)};
  opt.adjustment = {"w1", "w2", "w3"};
  opt.V = 5;
  opt.seed = 9;
  opt.g_bound = 0.45;  // aggressive: almost everything clips

  NuisanceFits nf = fit_nuisances(ds, opt);
  CHECK(nf.truncation_count > 0);
  for (Eigen::Index i = 0; i < nf.g.size(); ++i) {
    CHECK(nf.g(i) >= 0.45);
    CHECK(nf.g(i) <= 0.55);
  }

  // A permissive bound leaves the fitted propensities untouched.
  opt.g_bound = 0.001;
  NuisanceFits loose = fit_nuisances(ds, opt);
  CHECK(loose.truncation_count == 0);
  CHECK((loose.g - loose.g_raw).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fit_nuisances rejects single-arm samples") {
  Dataset ds = tlt::make_dataset({
      {{"Y", Role::outcome, Timing::baseline, Kind::binary}, {0, 1, 0, 1}},
      {{"A", Role::treatment, Timing::baseline, Kind::binary}, {1, 1, 1, 1}},
      {{"w", Role::covariate, Timing::baseline, Kind::continuous}, {1, 2, 3, 4}},
  });
  NuisanceOptions opt;
  opt.q_library = {LearnerSpec::make(LearnerKind::logistic)};
  opt.g_library = {LearnerSpec::make(LearnerKind::logistic)};
  opt.adjustment = {"w"};
  opt.V = 2;
  opt.g_bound = 0.0;
  CHECK_THROWS_WITH_AS(fit_nuisances(ds, opt), doctest::Contains("all-treated"),
                       EstimationError);
}

TEST_CASE("intercept-only propensity library gives the treated fraction") {
  Dataset ds = generate(dgp_a(), 300, 13);
  NuisanceOptions opt;
  opt.q_library = {LearnerSpec::make(LearnerKind::logistic)};
  opt.g_library = {LearnerSpec::make(LearnerKind::intercept_only)};
  opt.adjustment = {"w1", "w2", "w3"};
  opt.V = 5;
  opt.seed = 13;
  opt.g_bound = 0.0;
  NuisanceFits nf = fit_nuisances(ds, opt);
  double frac = ds.numeric("A").mean();
  for (Eigen::Index i = 0; i < nf.g_raw.size(); ++i) {
    CHECK(nf.g_raw(i) == doctest::Approx(frac).epsilon(1e-12));
  }
}

TEST_CASE("parametric baseline: null dose effect has OR near one") {
  Rng rng(17);
  int n = 3000;
  std::vector<double> y(static_cast<std::size_t>(n)), dose(static_cast<std::size_t>(n)),
      w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    dose[static_cast<std::size_t>(i)] = rng.uniform(0.0, 60.0);
    w[static_cast<std::size_t>(i)] = rng.normal();
    y[static_cast<std::size_t>(i)] = rng.bernoulli(0.2) ? 1.0 : 0.0;
  }
  Dataset ds = tlt::make_dataset({
      {{"y", Role::outcome, Timing::baseline, Kind::binary}, y},
      {{"dose", Role::dose, Timing::baseline, Kind::continuous}, dose},
      {{"w", Role::covariate, Timing::baseline, Kind::continuous}, w},
  });
  ParametricBaseline pb = parametric_baseline(ds, {"w"}, "dose");
  REQUIRE(pb.rows.size() == 3);  // intercept, dose, w
  const auto& dose_row = pb.rows[1];
  CHECK(dose_row.term == "dose");
  REQUIRE(dose_row.or_lo.has_value());
  CHECK(*dose_row.or_lo <= 1.0);
  CHECK(*dose_row.or_hi >= 1.0);
}

TEST_CASE("parametric baseline echoes timing violations as warnings") {
  Dataset ds = tlt::make_dataset({
      {{"y", Role::outcome, Timing::baseline, Kind::binary}, {0, 1, 0, 1, 1, 0}},
      {{"dose", Role::dose, Timing::baseline, Kind::continuous}, {0, 10, 5, 20, 0, 3}},
      {{"pph", Role::covariate, Timing::post_outcome, Kind::binary}, {0, 1, 0, 0, 1, 0}},
  });
  ParametricBaseline pb = parametric_baseline(ds, {"pph"}, "dose");
  bool saw_timing = false;
  for (const auto& wng : pb.warnings) {
    if (wng.code == "TIMING_VIOLATION" && wng.column == "pph") saw_timing = true;
  }
  CHECK(saw_timing);
}

TEST_CASE("parametric baseline suppresses Wald intervals under separation") {
  std::vector<double> y, dose;
  for (int i = 0; i < 30; ++i) {
    double d = static_cast<double>(i);
    dose.push_back(d);
    y.push_back(d > 14 ? 1.0 : 0.0);  // outcome is a threshold of the dose
  }
  Dataset ds = tlt::make_dataset({
      {{"y", Role::outcome, Timing::baseline, Kind::binary}, y},
      {{"dose", Role::dose, Timing::baseline, Kind::continuous}, dose},
  });
  ParametricBaseline pb = parametric_baseline(ds, {}, "dose");
  CHECK(pb.separation);
  CHECK_FALSE(pb.rows[1].or_lo.has_value());
  bool warned = false;
  for (const auto& wng : pb.warnings) {
    if (wng.code == "SEPARATION") warned = true;
  }
  CHECK(warned);
}
