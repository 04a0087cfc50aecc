#include "tl/tmle.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "tl/glm.hpp"
#include "tl/math.hpp"

namespace tl {

double truncation_bound(std::size_t n) {
  if (n < 2) throw ConfigError("truncation_bound: n must be at least 2");
  double nn = static_cast<double>(n);
  return 5.0 / (std::sqrt(nn) * std::log(nn));
}

double resolve_g_bound(std::size_t n, std::optional<double> override_bound) {
  if (override_bound) {
    if (*override_bound < 0.0 || *override_bound >= 0.5) {
      throw ConfigError("g_bound must lie in [0, 0.5)");
    }
    return *override_bound;
  }
  double b = truncation_bound(n);
  if (b >= 0.5) {
    throw ConfigError("computed truncation bound " + std::to_string(b) +
                      " is not below 0.5 at n=" + std::to_string(n) +
                      "; supply an explicit g_bound");
  }
  return b;
}

namespace {

// Q design: [A | W | A*interactions], with A forced to `a_value` when >= 0.
Eigen::MatrixXd q_design(const Eigen::VectorXd& A, const Design& w_design,
                         const Design& inter_design, double a_value) {
  const Eigen::Index n = A.size();
  const Eigen::Index p_w = w_design.X.cols();
  const Eigen::Index p_i = inter_design.X.cols();
  Eigen::MatrixXd X(n, 1 + p_w + p_i);
  Eigen::VectorXd a_col = a_value < 0.0 ? A : Eigen::VectorXd::Constant(n, a_value);
  X.col(0) = a_col;
  if (p_w > 0) X.block(0, 1, n, p_w) = w_design.X;
  for (Eigen::Index j = 0; j < p_i; ++j) {
    X.col(1 + p_w + j) = a_col.cwiseProduct(inter_design.X.col(j));
  }
  return X;
}

}  // namespace

NuisanceFits fit_nuisances(const Dataset& ds, const NuisanceOptions& opt) {
  if (opt.q_library.empty() || opt.g_library.empty()) {
    throw ConfigError("fit_nuisances: both learner libraries must be non-empty");
  }
  const Column* yc = ds.first_with_role(Role::outcome);
  const Column* ac = ds.first_with_role(Role::treatment);
  if (!yc || !ac) throw EstimationError("fit_nuisances: outcome or treatment column missing");

  NuisanceFits nf;
  nf.y = ds.numeric(yc->spec.name);
  nf.a = ds.numeric(ac->spec.name);
  const auto n = static_cast<std::size_t>(nf.y.size());

  double n_treated = nf.a.sum();
  if (n_treated == 0.0 || n_treated == static_cast<double>(n)) {
    throw EstimationError("fit_nuisances: sample is all-" +
                          std::string(n_treated == 0.0 ? "control" : "treated") +
                          "; positivity fails catastrophically");
  }

  nf.g_bound = resolve_g_bound(n, opt.g_bound);

  // Event-aware folds by default; one assignment shared by Q and g.
  std::vector<int> strata;
  const std::vector<int>* strata_ptr = nullptr;
  if (opt.stratify_folds) {
    strata.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      strata[i] = static_cast<int>(nf.y(static_cast<Eigen::Index>(i)));
    }
    strata_ptr = &strata;
  }
  FoldAssignment folds =
      make_folds(n, opt.V, opt.seed, strata_ptr, opt.stratify_folds ? yc->spec.name : "");

  Design w_design = build_design(ds, opt.adjustment);
  Design inter_design = build_design(ds, opt.q_interactions);
  const auto& g_cols = opt.g_adjustment.empty() ? opt.adjustment : opt.g_adjustment;
  Design gw_design = build_design(ds, g_cols);

  // Raw predictions are kept as-is except for an open-interval guard so the
  // fluctuation offset logit(Q) stays finite (linear learners can leave
  // [0,1] entirely).
  constexpr double kInterior = 1e-12;
  Eigen::MatrixXd Xq = q_design(nf.a, w_design, inter_design, -1.0);
  nf.q_fit = fit_super_learner(opt.q_library, Xq, nf.y, folds, opt.loss);
  nf.q_obs = clip_probabilities(sl_predict(nf.q_fit, Xq), kInterior);
  nf.q1 = clip_probabilities(sl_predict(nf.q_fit, q_design(nf.a, w_design, inter_design, 1.0)),
                             kInterior);
  nf.q0 = clip_probabilities(sl_predict(nf.q_fit, q_design(nf.a, w_design, inter_design, 0.0)),
                             kInterior);

  nf.g_fit = fit_super_learner(opt.g_library, gw_design.X, nf.a, folds, opt.loss);
  nf.g_raw = sl_predict(nf.g_fit, gw_design.X);

  nf.g = nf.g_raw;
  for (Eigen::Index i = 0; i < nf.g.size(); ++i) {
    double lo = std::max(nf.g_bound, 1e-12);  // keep g strictly inside (0,1)
    double clipped = clip(nf.g(i), lo, 1.0 - lo);
    if (clipped != nf.g(i)) {
      nf.g(i) = clipped;
      ++nf.truncation_count;
    }
  }

  for (const auto& w : nf.q_fit.warnings) nf.warnings.push_back("Q: " + w);
  for (const auto& w : nf.g_fit.warnings) nf.warnings.push_back("g: " + w);
  return nf;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> clever_covariates(const Eigen::VectorXd& A,
                                                              const Eigen::VectorXd& g) {
  if (A.size() != g.size()) throw DataError("clever_covariates: length mismatch");
  Eigen::VectorXd h1(A.size()), h0(A.size());
  for (Eigen::Index i = 0; i < A.size(); ++i) {
    if (!(g(i) > 0.0 && g(i) < 1.0)) {
      throw EstimationError("clever_covariates: propensity at 0 or 1 (row " +
                            std::to_string(i + 1) + ")");
    }
    h1(i) = A(i) / g(i);
    h0(i) = -(1.0 - A(i)) / (1.0 - g(i));
  }
  return {h1, h0};
}

Fluctuation fluctuate(const Eigen::VectorXd& q_init, const Eigen::VectorXd& h1,
                      const Eigen::VectorXd& h0, const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  Eigen::VectorXd offset(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(q_init(i) > 0.0 && q_init(i) < 1.0)) {
      throw EstimationError("fluctuate: initial outcome predictions must lie in (0,1)");
    }
    offset(i) = logit(q_init(i));
    if (!std::isfinite(offset(i))) throw EstimationError("fluctuate: non-finite offset");
  }
  Eigen::MatrixXd H(n, 2);
  H.col(0) = h0;
  H.col(1) = h1;

  // Solved to near machine precision: the influence-curve equation inherits
  // whatever score residual remains here.
  IrlsOptions opt;
  opt.max_iter = 200;
  opt.dev_tol = 1e-13;
  opt.score_tol = 1e-11 * static_cast<double>(n);
  opt.eta_cap = 1e6;  // offsets are capped upstream; do not trip on them
  IrlsFit f = irls_logistic(H, y, Eigen::VectorXd::Ones(n), offset, opt);

  Fluctuation fl;
  fl.eps0 = f.beta(0);
  fl.eps1 = f.beta(1);
  fl.converged = f.converged;
  return fl;
}

double gcomp_estimate(const Eigen::VectorXd& q1, const Eigen::VectorXd& q0) {
  return (q1 - q0).mean();
}

namespace {

struct MeanIc {
  double mean;
  Eigen::VectorXd ic;
};

// Influence curve for one counterfactual mean: Ha*(Y - Q*) + Q*a - mu_a.
MeanIc mean_ic(const Eigen::VectorXd& ha, const Eigen::VectorXd& y, const Eigen::VectorXd& q_obs,
               const Eigen::VectorXd& qa) {
  MeanIc m;
  m.mean = qa.mean();
  m.ic = ha.cwiseProduct(y - q_obs) + qa - Eigen::VectorXd::Constant(qa.size(), m.mean);
  return m;
}

double se_of(const Eigen::VectorXd& ic) {
  return std::sqrt(sample_variance(ic) / static_cast<double>(ic.size()));
}

}  // namespace

TmleResult tmle_estimate(const NuisanceFits& nf, const Fluctuation& fl) {
  const Eigen::Index n = nf.y.size();
  TmleResult r;
  r.fluctuation = fl;
  r.g_bound = nf.g_bound;
  r.truncation_count = nf.truncation_count;

  // Targeted predictions: update each arm with its clever covariate at A=a.
  Eigen::VectorXd q1_star(n), q0_star(n), q_obs_star(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double h1_at1 = 1.0 / nf.g(i);
    double h0_at0 = -1.0 / (1.0 - nf.g(i));
    q1_star(i) = expit(logit(nf.q1(i)) + fl.eps1 * h1_at1);
    q0_star(i) = expit(logit(nf.q0(i)) + fl.eps0 * h0_at0);
    q_obs_star(i) = nf.a(i) == 1.0 ? q1_star(i) : q0_star(i);
  }

  Eigen::VectorXd h1 = nf.a.cwiseQuotient(nf.g);
  Eigen::VectorXd h0(n);
  for (Eigen::Index i = 0; i < n; ++i) h0(i) = -(1.0 - nf.a(i)) / (1.0 - nf.g(i));

  MeanIc m1 = mean_ic(h1, nf.y, q_obs_star, q1_star);
  MeanIc m0 = mean_ic(-h0, nf.y, q_obs_star, q0_star);  // -h0 = (1-A)/(1-g)

  r.mu1 = m1.mean;
  r.mu0 = m0.mean;
  r.psi_rd = r.mu1 - r.mu0;
  r.ic_rd = m1.ic - m0.ic;
  r.ic_mean_rd = r.ic_rd.mean();
  r.se_rd = se_of(r.ic_rd);
  r.ci_rd_lo = r.psi_rd - 1.96 * r.se_rd;
  r.ci_rd_hi = r.psi_rd + 1.96 * r.se_rd;

  r.gcomp_rd = gcomp_estimate(nf.q1, nf.q0);

  // Ratio estimands on the log scale via delta-method influence curves.
  if (r.mu0 > 1e-12) {
    r.psi_rr = r.mu1 / r.mu0;
    r.ic_log_rr = m1.ic / r.mu1 - m0.ic / r.mu0;
    r.se_log_rr = se_of(r.ic_log_rr);
    double log_rr = std::log(*r.psi_rr);
    r.ci_rr_lo = std::exp(log_rr - 1.96 * *r.se_log_rr);
    r.ci_rr_hi = std::exp(log_rr + 1.96 * *r.se_log_rr);
  }
  if (r.mu0 > 1e-12 && r.mu1 > 1e-12 && r.mu0 < 1.0 - 1e-12 && r.mu1 < 1.0 - 1e-12) {
    r.psi_or = (r.mu1 / (1.0 - r.mu1)) / (r.mu0 / (1.0 - r.mu0));
    r.ic_log_or = m1.ic / (r.mu1 * (1.0 - r.mu1)) - m0.ic / (r.mu0 * (1.0 - r.mu0));
    r.se_log_or = se_of(r.ic_log_or);
    double log_or = std::log(*r.psi_or);
    r.ci_or_lo = std::exp(log_or - 1.96 * *r.se_log_or);
    r.ci_or_hi = std::exp(log_or + 1.96 * *r.se_log_or);
  }
  return r;
}

TmleResult run_tmle(const Dataset& ds, const NuisanceOptions& opt, NuisanceFits* nuisances_out) {
  NuisanceFits nf = fit_nuisances(ds, opt);
  auto [h1, h0] = clever_covariates(nf.a, nf.g);
  Fluctuation fl = fluctuate(nf.q_obs, h1, h0, nf.y);
  TmleResult r = tmle_estimate(nf, fl);
  if (nuisances_out) *nuisances_out = std::move(nf);
  return r;
}

ParametricBaseline parametric_baseline(const Dataset& ds,
                                       const std::vector<std::string>& formula_columns,
                                       const std::string& dose_column) {
  const Column* yc = ds.first_with_role(Role::outcome);
  if (!yc) throw DataError("parametric_baseline: no outcome column");

  ParametricBaseline out;
  // Echo the timing critique: covariates recorded at or after the outcome
  // cannot sit in a causal model of it.
  for (const auto& name : formula_columns) {
    const Column& c = ds.col(name);
    if (c.spec.timing != Timing::baseline) {
      out.warnings.push_back({"TIMING_VIOLATION", name,
                              "covariate '" + name + "' has timing " + to_string(c.spec.timing) +
                                  "; a cause must precede an effect"});
    }
  }

  std::vector<std::string> cols;
  cols.push_back(dose_column);
  for (const auto& c : formula_columns) cols.push_back(c);
  Design d = build_design(ds, cols);

  Eigen::MatrixXd X(d.X.rows(), d.X.cols() + 1);
  X.col(0).setOnes();
  X.rightCols(d.X.cols()) = d.X;
  Eigen::VectorXd y = ds.numeric(yc->spec.name);

  IrlsFit f = irls_logistic(X, y, Eigen::VectorXd::Ones(y.size()), Eigen::VectorXd::Zero(y.size()));
  out.separation = f.separated;
  out.converged = f.converged;
  if (f.separated) {
    out.warnings.push_back({"SEPARATION", "",
                            "logistic fit separated; Wald intervals suppressed"});
  }

  Eigen::MatrixXd cov = f.information.llt().solve(
      Eigen::MatrixXd::Identity(X.cols(), X.cols()));
  std::vector<std::string> names;
  names.push_back("(intercept)");
  for (const auto& nm : d.names) names.push_back(nm);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    CoefficientRow row;
    row.term = names[static_cast<std::size_t>(j)];
    row.estimate = f.beta(j);
    row.se = std::sqrt(std::max(0.0, cov(j, j)));
    row.odds_ratio = std::exp(row.estimate);
    if (!f.separated) {
      row.or_lo = std::exp(row.estimate - 1.96 * row.se);
      row.or_hi = std::exp(row.estimate + 1.96 * row.se);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace tl
