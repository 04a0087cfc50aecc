#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "tl/data.hpp"
#include "tl/super_learner.hpp"

namespace tl {

// Propensity truncation bound 5 / (sqrt(n) * ln(n)). Throws on n < 2.
double truncation_bound(std::size_t n);

// Returns the bound to use: the override when given, otherwise the formula.
// When the formula yields >= 0.5 an explicit override is required.
double resolve_g_bound(std::size_t n, std::optional<double> override_bound);

struct NuisanceOptions {
  std::vector<LearnerSpec> q_library;
  std::vector<LearnerSpec> g_library;
  std::vector<std::string> adjustment;       // W columns for the outcome regression
  std::vector<std::string> g_adjustment;     // W columns for the propensity (empty = same)
  std::vector<std::string> q_interactions;   // covariates interacted with treatment in Q
  int V = 20;
  std::uint64_t seed = 20170704;
  bool stratify_folds = true;                // event-aware folds (stratify on the outcome)
  LossKind loss = LossKind::negative_log_likelihood;
  std::optional<double> g_bound;             // 0 disables truncation
};

struct NuisanceFits {
  Eigen::VectorXd y;            // analysis response
  Eigen::VectorXd a;            // analysis treatment
  Eigen::VectorXd q_obs, q1, q0;  // initial outcome regression at (A, 1, 0), in (0,1)
  Eigen::VectorXd g_raw, g;       // propensity before/after truncation
  double g_bound = 0.0;
  int truncation_count = 0;
  SuperLearnerFit q_fit, g_fit;
  std::vector<std::string> warnings;
};

// Fits Q via super learner on (A, W [, A*interactions]) and g on W, then
// truncates g symmetrically into [bound, 1-bound]. Throws EstimationError on
// an all-treated or all-control sample.
NuisanceFits fit_nuisances(const Dataset& ds, const NuisanceOptions& opt);

// H1 = A/g, H0 = -(1-A)/(1-g). Throws on g outside (0,1).
std::pair<Eigen::VectorXd, Eigen::VectorXd> clever_covariates(const Eigen::VectorXd& A,
                                                              const Eigen::VectorXd& g);

struct Fluctuation {
  double eps0 = 0.0;
  double eps1 = 0.0;
  bool converged = false;
};

// Solves the targeting step: logistic regression of Y on (H0, H1) with
// offset logit(q_init) and no intercept, run to a tight score tolerance so
// the efficient influence-curve equation holds at the end.
Fluctuation fluctuate(const Eigen::VectorXd& q_init, const Eigen::VectorXd& h1,
                      const Eigen::VectorXd& h0, const Eigen::VectorXd& y);

struct TmleResult {
  double mu1 = 0.0, mu0 = 0.0;
  double psi_rd = 0.0;
  double se_rd = 0.0;
  double ci_rd_lo = 0.0, ci_rd_hi = 0.0;
  std::optional<double> psi_rr, se_log_rr, ci_rr_lo, ci_rr_hi;
  std::optional<double> psi_or, se_log_or, ci_or_lo, ci_or_hi;
  Eigen::VectorXd ic_rd, ic_log_rr, ic_log_or;
  double ic_mean_rd = 0.0;  // should be ~0 after targeting
  double gcomp_rd = 0.0;    // untargeted plug-in, no valid SE
  Fluctuation fluctuation;
  double g_bound = 0.0;
  int truncation_count = 0;
};

// Builds the targeted estimates, influence curves, and Wald intervals from
// the fitted nuisances and the fluctuation.
TmleResult tmle_estimate(const NuisanceFits& nf, const Fluctuation& fl);

// Untargeted substitution estimate mean(q1 - q0); carries no valid SE.
double gcomp_estimate(const Eigen::VectorXd& q1, const Eigen::VectorXd& q0);

// Convenience: nuisances -> clever covariates -> fluctuation -> estimate.
TmleResult run_tmle(const Dataset& ds, const NuisanceOptions& opt,
                    NuisanceFits* nuisances_out = nullptr);

// Maximum-likelihood main-terms logistic regression of the outcome on the
// dose plus the listed columns, reported as per-unit odds ratios with Wald
// intervals. Mirrors the kind of parametric analysis the roadmap critiques;
// timing problems surface as warnings, separation suppresses the intervals.
struct CoefficientRow {
  std::string term;
  double estimate = 0.0;
  double se = 0.0;
  double odds_ratio = 1.0;
  std::optional<double> or_lo, or_hi;
};
struct ParametricBaseline {
  std::vector<CoefficientRow> rows;
  std::vector<Finding> warnings;
  bool separation = false;
  bool converged = true;
};
ParametricBaseline parametric_baseline(const Dataset& ds,
                                       const std::vector<std::string>& formula_columns,
                                       const std::string& dose_column);

}  // namespace tl
