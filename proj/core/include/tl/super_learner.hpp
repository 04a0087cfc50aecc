#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tl/learners.hpp"

namespace tl {

// Deterministic V-fold assignment. Fold sizes differ by at most one overall
// and, when stratified, within every stratum.
struct FoldAssignment {
  std::vector<int> fold;  // per observation, in [0, V)
  int V = 0;
  std::uint64_t seed = 0;
  std::optional<std::string> stratified_on;

  std::vector<int> sizes() const;
};

// `strata` (optional) holds integer labels; every stratum must have at least
// two members. Throws ConfigError on V < 2, V > n, or an undersized stratum.
FoldAssignment make_folds(std::size_t n, int V, std::uint64_t seed,
                          const std::vector<int>* strata = nullptr,
                          const std::string& strata_name = "");

// Held-out predictions: entry (i, l) comes from learner l trained without
// row i's fold. A learner that fails on some folds contributes its training
// base rate for those folds; failing every fold drops it.
struct CvPredictions {
  Eigen::MatrixXd heldout;       // n x L
  Eigen::VectorXd cv_risks;      // per learner; NaN when dropped
  std::vector<bool> dropped;     // per learner
  std::vector<std::string> warnings;
};
CvPredictions cv_predictions(const std::vector<LearnerSpec>& library, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y, const FoldAssignment& folds,
                             LossKind loss);

// Convex weights minimizing the held-out risk of the combination:
// projected-gradient descent on the simplex, then a vertex comparison so the
// ensemble can never do worse than the best single column. Ties lean toward
// lower column indices (risks get +1e-12 * index).
Eigen::VectorXd solve_weights(const Eigen::MatrixXd& heldout, const Eigen::VectorXd& y,
                              LossKind loss, std::vector<std::string>* warnings = nullptr);

struct SuperLearnerFit {
  std::vector<LearnerSpec> library;
  Eigen::VectorXd weights;       // simplex; 0 for dropped learners
  Eigen::VectorXd cv_risks;      // NaN for dropped learners
  double ensemble_cv_risk = 0.0;
  std::vector<bool> dropped;
  std::vector<LearnerFit> full_fits;  // aligned with library; dropped slots are default fits
  FoldAssignment folds;
  LossKind loss = LossKind::negative_log_likelihood;
  std::vector<std::string> warnings;
};

// CV risks -> weights -> full-data refits. Throws EstimationError when every
// learner fails.
SuperLearnerFit fit_super_learner(const std::vector<LearnerSpec>& library,
                                  const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const FoldAssignment& folds, LossKind loss);

Eigen::VectorXd sl_predict(const SuperLearnerFit& fit, const Eigen::MatrixXd& X);

}  // namespace tl
