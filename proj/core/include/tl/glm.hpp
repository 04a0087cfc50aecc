#pragma once

#include <Eigen/Core>

namespace tl {

struct IrlsOptions {
  int max_iter = 100;
  double dev_tol = 1e-8;    // change in deviance, relative to (|deviance| + 1)
  double score_tol = 0.0;   // if > 0, additionally require max|score| below this
  double eta_cap = 30.0;    // |X*beta| beyond this flags separation and stops
};

struct IrlsFit {
  Eigen::VectorXd beta;
  bool converged = false;
  bool separated = false;
  bool ridged = false;  // ridge jitter was needed for a singular information matrix
  int iterations = 0;
  double deviance = 0.0;
  Eigen::MatrixXd information;  // X' W X at the final beta (Wald covariance = inverse)
};

// Newton/IRLS for weighted binomial regression with offset. X must already
// contain an intercept column if one is wanted. Step-halving keeps the
// deviance monotone; separation (|X*beta| exceeding eta_cap) stops early
// with converged=false and finite coefficients.
IrlsFit irls_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& weights, const Eigen::VectorXd& offset,
                      const IrlsOptions& opt = {});

// Weighted least squares via the normal equations; applies escalating ridge
// jitter when the Gram matrix is singular (reported via ridged).
struct WlsFit {
  Eigen::VectorXd beta;
  bool ridged = false;
};
WlsFit weighted_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& weights);

double binomial_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& weights);

// Mean negative log-likelihood of logistic predictions expit(X beta) and its
// analytic gradient X'(p - y)/n; this is the smooth part both the IRLS score
// and the lasso coordinate updates are built from.
double logistic_nll(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& beta);
Eigen::VectorXd logistic_nll_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& beta);

}  // namespace tl
