#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tl/data.hpp"
#include "tl/tmle.hpp"

namespace tl {

// Covariate generator: a named distribution with optional clipping.
struct CovariateGen {
  enum class Dist { bernoulli, uniform, normal };
  std::string name;
  Dist dist = Dist::bernoulli;
  double p1 = 0.5, p2 = 0.0;  // (p) / (lo, hi) / (mean, sd)
  std::optional<std::pair<double, double>> clip_range;

  // "bernoulli(0.4)", "uniform(0,1)", "normal(0,1) clip(-3,3)"
  static CovariateGen parse(const std::string& name, const std::string& text);
  std::string text() const;
};

// Logit-scale linear expression with product terms, e.g.
// "-1.2 + 0.9*A + 0.5*w1 + 0.4*A*w1". The treatment enters as the literal
// variable "A".
struct LinearLogistic {
  struct Term {
    double coef = 0.0;
    std::vector<std::string> vars;  // empty = intercept contribution
  };
  std::vector<Term> terms;

  static LinearLogistic parse(const std::string& text);
  double logit_at(const std::map<std::string, double>& values) const;
  double prob_at(const std::map<std::string, double>& values) const;
  std::vector<std::string> variables() const;
  std::string text() const;
};

struct DgpSpec {
  std::vector<CovariateGen> covariates;
  LinearLogistic treatment_model;  // true g0 on the logit scale, over W
  LinearLogistic outcome_model;    // true Q0 on the logit scale, over (A, W)
  std::uint64_t seed = 20170704;

  void check() const;  // all referenced variables declared, parameters valid
};

// W ~ covariate generators, A ~ Bernoulli(g0(W)), Y ~ Bernoulli(Q0(A,W)).
// Byte-identical output for a fixed seed.
Dataset generate(const DgpSpec& dgp, std::size_t n, std::uint64_t seed);

// Monte-Carlo oracle for the marginal estimands over fresh covariate draws.
struct OracleEstimand {
  double rd = 0.0;
  double rr = 0.0;
  double odds_ratio = 0.0;
  double mc_se_rd = 0.0;
  std::size_t mc_size = 0;
};
OracleEstimand true_psi(const DgpSpec& dgp, std::size_t mc_size, std::uint64_t seed);

enum class EstimatorKind { tmle, gcomp, oracle };
EstimatorKind estimator_kind_from_string(const std::string& s);
std::string to_string(EstimatorKind k);

struct EstimatorConfig {
  std::string name;
  EstimatorKind kind = EstimatorKind::tmle;
  std::vector<LearnerSpec> q_library{LearnerSpec::make(LearnerKind::logistic)};
  std::vector<LearnerSpec> g_library{LearnerSpec::make(LearnerKind::logistic)};
  std::vector<std::string> q_interactions;
  int V = 5;
  std::optional<double> g_bound;
  double oracle_value = 0.0;  // only for kind=oracle
};

struct EstimatorSummary {
  std::string name;
  int reps = 0;
  double mean_estimate = 0.0;
  double mean_bias = 0.0;
  std::optional<double> sd_estimate;   // absent when reps = 1
  std::optional<double> mean_se;       // CI-bearing estimators only
  std::optional<double> coverage;
  std::optional<double> mean_ci_width;
};

struct ReplicationSummary {
  int reps = 0;
  std::size_t n = 0;
  double true_rd = 0.0;
  double oracle_mc_se = 0.0;
  std::vector<EstimatorSummary> estimators;
};

struct ReplicateOptions {
  std::size_t mc_size = 1000000;  // oracle Monte-Carlo size
  std::uint64_t oracle_seed = 42;
  int threads = 1;
};

// Replicate i draws a fresh cohort with seed dgp.seed + i (0-based), runs
// every configured estimator, and aggregates against the oracle. The first
// failing replicate aborts the study with its seed in the message.
ReplicationSummary replicate_study(const DgpSpec& dgp, std::size_t n, int reps,
                                   const std::vector<EstimatorConfig>& estimators,
                                   const ReplicateOptions& opt = {});

// Canned 8-row saturated fixture: one binary covariate, both arms in both
// strata, stratified risk difference exactly 0.5.
Dataset e8_dataset();
double e8_stratified_rd();  // computed from the fixture by direct stratification

// Canonical simulation used across the test-suite: three covariates, both
// nuisances logistic-representable, outcome model with a treatment-covariate
// interaction.
DgpSpec dgp_a();

}  // namespace tl
