#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tl/error.hpp"

namespace tl {

enum class LossKind { squared_error, negative_log_likelihood };

LossKind loss_from_string(const std::string& s);
std::string to_string(LossKind k);

// Mean loss. For negative_log_likelihood, predictions are clipped to
// [1e-6, 1-1e-6] before taking logs; raw predictions are never modified.
double loss_value(LossKind kind, const Eigen::VectorXd& y, const Eigen::VectorXd& pred);

constexpr double kProbClip = 1e-6;
Eigen::VectorXd clip_probabilities(Eigen::VectorXd p, double eps = kProbClip);

enum class LearnerKind {
  intercept_only,
  linear,
  logistic,
  lasso_logistic,
  spline_logistic,
  boosted_stumps,
};

std::string to_string(LearnerKind k);

// A base algorithm for the super learner library. Hyperparameters are
// validated per kind at construction:
//   lasso_logistic: nlambda (50), lambda_min_ratio (1e-3), cv_folds (5), cv_seed (1)
//   spline_logistic: knots (3)
//   boosted_stumps: rounds (100), lr (0.1)
struct LearnerSpec {
  LearnerKind kind = LearnerKind::logistic;
  std::map<std::string, double> hyper;

  static LearnerSpec make(LearnerKind kind, std::map<std::string, double> hyper = {});
  // Text form used in run configurations: "logistic",
  // "boosted_stumps:rounds=200,lr=0.05".
  static LearnerSpec parse(const std::string& text);
  std::string name() const;
  double get(const std::string& key, double fallback) const;
};

// Fitted models, by family.
struct GlmModel {
  Eigen::VectorXd beta;  // [intercept, coefficients...]
  bool logistic = true;
};

struct SplineBasis {
  bool is_spline = false;        // false: passes through linearly
  std::vector<double> knots;     // ascending, includes boundary knots
};
struct SplineModel {
  GlmModel glm;
  std::vector<SplineBasis> columns;  // one per input column
};

struct Stump {
  int feature = 0;
  double threshold = 0.0;
  double left = 0.0;   // additive logit contributions, shrinkage applied
  double right = 0.0;
};
struct StumpModel {
  double base = 0.0;  // logit of the (weighted) base rate
  std::vector<Stump> stumps;
};

struct LassoModel {
  GlmModel glm;
  double lambda = 0.0;  // penalty chosen by internal cross-validation
};

struct LearnerFit {
  LearnerSpec spec;
  Eigen::Index n_features = 0;
  double training_loss = 0.0;
  bool converged = true;
  bool used_offset = false;
  std::vector<std::string> warnings;
  std::variant<GlmModel, SplineModel, LassoModel, StumpModel> model;
};

// Fits `spec` to (X, y). Logistic-family kinds accept an offset on the logit
// scale (needed by the TMLE fluctuation) and require binary y. Deterministic
// given inputs; non-convergence and singular designs degrade to warnings.
LearnerFit fit(const LearnerSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               const Eigen::VectorXd* weights = nullptr,
               const Eigen::VectorXd* offset = nullptr);

// Response-scale predictions (probabilities for logistic-family kinds).
// Throws DataError when the column count differs from training.
Eigen::VectorXd predict(const LearnerFit& fit, const Eigen::MatrixXd& X);
Eigen::VectorXd predict(const LearnerFit& fit, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& offset);

// Coordinate-descent lasso path. Columns are standardized internally and the
// returned coefficients are on the original scale, [intercept, betas...].
// The grid must be positive; pass descending lambdas for warm starts.
struct LassoPath {
  std::vector<double> lambdas;
  std::vector<Eigen::VectorXd> coefficients;
};
LassoPath lasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const std::vector<double>& lambda_grid, LossKind loss,
                     const Eigen::VectorXd* weights = nullptr);

// Smallest penalty at which every coefficient is zero, plus the default
// log-spaced grid derived from it.
double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, LossKind loss,
                        const Eigen::VectorXd* weights = nullptr);
std::vector<double> default_lambda_grid(double lambda_max, int nlambda = 50,
                                        double min_ratio = 1e-3);

// Natural cubic spline basis values for x over the given knot vector
// (ascending, length K >= 2): [x, then K-2 natural-spline terms].
Eigen::VectorXd natural_spline_basis(double x, const std::vector<double>& knots);

}  // namespace tl
