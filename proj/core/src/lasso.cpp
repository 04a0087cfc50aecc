#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <vector>

#include "tl/glm.hpp"
#include "tl/learners.hpp"
#include "tl/math.hpp"
#include "tl/rng.hpp"

namespace tl {

namespace {

struct Standardized {
  Eigen::MatrixXd X;          // centered/scaled copy
  Eigen::VectorXd mean, sd;   // per column
  std::vector<bool> active;   // false for constant columns
};

Standardized standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
  Standardized s;
  const Eigen::Index p = X.cols();
  s.X = X;
  s.mean.resize(p);
  s.sd.resize(p);
  s.active.assign(static_cast<std::size_t>(p), true);
  const double W = w.sum();
  for (Eigen::Index j = 0; j < p; ++j) {
    double m = w.cwiseProduct(X.col(j)).sum() / W;
    double v = w.cwiseProduct((X.col(j).array() - m).square().matrix()).sum() / W;
    double sd = std::sqrt(v);
    s.mean(j) = m;
    s.sd(j) = sd;
    if (sd < 1e-12) {
      s.active[static_cast<std::size_t>(j)] = false;
      s.X.col(j).setZero();
    } else {
      s.X.col(j) = (X.col(j).array() - m) / sd;
    }
  }
  return s;
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// One weighted-lasso coordinate-descent solve on standardized columns.
// Objective: (1/(2W)) sum omega_i (z_i - b0 - X beta)^2 + lambda * sum |beta_j|.
void cd_solve(const Standardized& s, const Eigen::VectorXd& omega, const Eigen::VectorXd& z,
              double lambda, double* b0, Eigen::VectorXd* beta) {
  const Eigen::Index p = s.X.cols();
  const double W = omega.sum();
  Eigen::VectorXd xsq(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    xsq(j) = omega.cwiseProduct(s.X.col(j).cwiseAbs2()).sum() / W;
  }
  Eigen::VectorXd resid = z - Eigen::VectorXd::Constant(z.size(), *b0) - s.X * (*beta);
  for (int sweep = 0; sweep < 10000; ++sweep) {
    double max_delta = 0.0;
    // intercept is unpenalized
    double db0 = omega.cwiseProduct(resid).sum() / W;
    *b0 += db0;
    resid.array() -= db0;
    max_delta = std::abs(db0);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!s.active[static_cast<std::size_t>(j)]) continue;
      double old = (*beta)(j);
      double u = omega.cwiseProduct(s.X.col(j)).dot(resid) / W + old * xsq(j);
      double next = soft_threshold(u, lambda) / xsq(j);
      if (next != old) {
        resid -= s.X.col(j) * (next - old);
        (*beta)(j) = next;
        max_delta = std::max(max_delta, std::abs(next - old));
      }
    }
    if (max_delta < 1e-10) break;
  }
}

Eigen::VectorXd to_original_scale(const Standardized& s, double b0, const Eigen::VectorXd& beta) {
  Eigen::VectorXd out(beta.size() + 1);
  double intercept = b0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (!s.active[static_cast<std::size_t>(j)] || beta(j) == 0.0) {
      out(j + 1) = 0.0;
      continue;
    }
    out(j + 1) = beta(j) / s.sd(j);
    intercept -= beta(j) * s.mean(j) / s.sd(j);
  }
  out(0) = intercept;
  return out;
}

}  // namespace

double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, LossKind loss,
                        const Eigen::VectorXd* weights) {
  Eigen::VectorXd w = weights ? *weights : Eigen::VectorXd::Ones(y.size());
  Standardized s = standardize(X, w);
  const double W = w.sum();
  double ybar = w.cwiseProduct(y).sum() / W;
  (void)loss;  // same null-residual form for both losses
  double lmax = 0.0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (!s.active[static_cast<std::size_t>(j)]) continue;
    double g = std::abs(w.cwiseProduct(s.X.col(j)).dot(y - Eigen::VectorXd::Constant(y.size(), ybar))) / W;
    lmax = std::max(lmax, g);
  }
  return lmax > 0.0 ? lmax : 1e-3;
}

std::vector<double> default_lambda_grid(double lambda_max, int nlambda, double min_ratio) {
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(nlambda));
  double log_max = std::log(lambda_max);
  double log_min = std::log(lambda_max * min_ratio);
  for (int i = 0; i < nlambda; ++i) {
    double t = nlambda == 1 ? 0.0 : static_cast<double>(i) / (nlambda - 1);
    grid.push_back(std::exp(log_max + t * (log_min - log_max)));
  }
  return grid;
}

LassoPath lasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const std::vector<double>& lambda_grid, LossKind loss,
                     const Eigen::VectorXd* weights) {
  if (X.rows() != y.size() || y.size() == 0) throw DataError("lasso_path: shape mismatch");
  if (lambda_grid.empty()) throw DataError("lasso_path: empty lambda grid");
  for (double l : lambda_grid) {
    if (l < 0.0 || !std::isfinite(l)) throw DataError("lasso_path: lambdas must be non-negative");
  }
  std::vector<double> grid = lambda_grid;
  std::sort(grid.rbegin(), grid.rend());

  Eigen::VectorXd w = weights ? *weights : Eigen::VectorXd::Ones(y.size());
  Standardized s = standardize(X, w);
  const double W = w.sum();

  LassoPath path;
  path.lambdas = grid;

  double b0 = 0.0;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
  if (loss == LossKind::negative_log_likelihood) {
    double ybar = clip(w.cwiseProduct(y).sum() / W, kProbClip, 1.0 - kProbClip);
    b0 = logit(ybar);
  } else {
    b0 = w.cwiseProduct(y).sum() / W;
  }

  for (double lambda : grid) {
    if (loss == LossKind::squared_error) {
      cd_solve(s, w, y, lambda, &b0, &beta);
    } else {
      // Outer quadratic approximation (IRLS-style), inner coordinate descent.
      double prev_dev = std::numeric_limits<double>::infinity();
      for (int outer = 0; outer < 50; ++outer) {
        Eigen::VectorXd eta = Eigen::VectorXd::Constant(y.size(), b0) + s.X * beta;
        Eigen::VectorXd mu = expit(eta);
        Eigen::VectorXd omega(y.size()), z(y.size());
        for (Eigen::Index i = 0; i < y.size(); ++i) {
          double v = std::max(mu(i) * (1.0 - mu(i)), 1e-5);
          omega(i) = w(i) * v;
          z(i) = eta(i) + (y(i) - mu(i)) / v;
        }
        cd_solve(s, omega, z, lambda * W / omega.sum(), &b0, &beta);
        eta = Eigen::VectorXd::Constant(y.size(), b0) + s.X * beta;
        double dev = binomial_deviance(y, expit(eta), w);
        if (std::abs(prev_dev - dev) < 1e-9 * (std::abs(dev) + 1.0)) break;
        prev_dev = dev;
      }
    }
    path.coefficients.push_back(to_original_scale(s, b0, beta));
  }
  return path;
}

// Learner wrapper: internal K-fold CV over the default grid, then the path
// coefficients at the selected penalty. Declared in learners.cpp.
LearnerFit fit_lasso_learner(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                             const Eigen::VectorXd* offset) {
  if (offset) {
    throw DataError("lasso_logistic does not support offsets");
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw DataError("lasso_logistic requires a binary response");
  }

  const int nlambda = static_cast<int>(spec.get("nlambda", 50));
  const double min_ratio = spec.get("lambda_min_ratio", 1e-3);
  const int folds = static_cast<int>(spec.get("cv_folds", 5));
  const auto cv_seed = static_cast<std::uint64_t>(spec.get("cv_seed", 1));

  double lmax = lasso_lambda_max(X, y, LossKind::negative_log_likelihood, &w);
  std::vector<double> grid = default_lambda_grid(lmax, nlambda, min_ratio);

  const Eigen::Index n = X.rows();
  double chosen = grid.front();
  if (n >= 2 * folds && X.cols() > 0) {
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index(0));
    Rng rng(cv_seed);
    rng.shuffle(perm);

    std::vector<double> risk(grid.size(), 0.0);
    for (int f = 0; f < folds; ++f) {
      std::vector<Eigen::Index> train, test;
      for (std::size_t k = 0; k < perm.size(); ++k) {
        (static_cast<int>(k % static_cast<std::size_t>(folds)) == f ? test : train)
            .push_back(perm[k]);
      }
      Eigen::MatrixXd Xtr(train.size(), X.cols());
      Eigen::VectorXd ytr(train.size()), wtr(train.size());
      for (std::size_t k = 0; k < train.size(); ++k) {
        Xtr.row(static_cast<Eigen::Index>(k)) = X.row(train[k]);
        ytr(static_cast<Eigen::Index>(k)) = y(train[k]);
        wtr(static_cast<Eigen::Index>(k)) = w(train[k]);
      }
      LassoPath p = lasso_path(Xtr, ytr, grid, LossKind::negative_log_likelihood, &wtr);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const Eigen::VectorXd& b = p.coefficients[g];
        double fold_loss = 0.0;
        for (auto idx : test) {
          double eta = b(0) + X.row(idx) * b.tail(b.size() - 1);
          double mu = clip(expit(eta), kProbClip, 1.0 - kProbClip);
          fold_loss -= y(idx) * std::log(mu) + (1.0 - y(idx)) * std::log1p(-mu);
        }
        risk[g] += fold_loss;
      }
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (risk[g] < best) {  // ties keep the larger (earlier) lambda
        best = risk[g];
        chosen = grid[g];
      }
    }
  }

  LassoPath full = lasso_path(X, y, grid, LossKind::negative_log_likelihood, &w);
  std::size_t pick = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (grid[g] == chosen) pick = g;
  }

  LearnerFit fit;
  fit.spec = spec;
  fit.n_features = X.cols();
  fit.model = LassoModel{GlmModel{full.coefficients[pick], true}, chosen};
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(
      n, full.coefficients[pick](0));
  eta += X * full.coefficients[pick].tail(X.cols());
  fit.training_loss = loss_value(LossKind::negative_log_likelihood, y, expit(eta));
  return fit;
}

}  // namespace tl
