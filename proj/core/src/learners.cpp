#include "tl/learners.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "tl/glm.hpp"
#include "tl/math.hpp"

namespace tl {

LossKind loss_from_string(const std::string& s) {
  if (s == "nll" || s == "negative_log_likelihood") return LossKind::negative_log_likelihood;
  if (s == "squared_error" || s == "mse") return LossKind::squared_error;
  throw ConfigError("unknown loss: " + s);
}

std::string to_string(LossKind k) {
  return k == LossKind::squared_error ? "squared_error" : "nll";
}

Eigen::VectorXd clip_probabilities(Eigen::VectorXd p, double eps) {
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = clip(p(i), eps, 1.0 - eps);
  return p;
}

double loss_value(LossKind kind, const Eigen::VectorXd& y, const Eigen::VectorXd& pred) {
  if (y.size() != pred.size() || y.size() == 0) {
    throw DataError("loss: response and prediction lengths differ");
  }
  const auto n = static_cast<double>(y.size());
  if (kind == LossKind::squared_error) {
    return (y - pred).squaredNorm() / n;
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double p = clip(pred(i), kProbClip, 1.0 - kProbClip);
    total -= y(i) * std::log(p) + (1.0 - y(i)) * std::log1p(-p);
  }
  return total / n;
}

// ---------------------------------------------------------------------------
// GLM core
// ---------------------------------------------------------------------------

double binomial_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& weights) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double pi = clip(p(i), 1e-12, 1.0 - 1e-12);
    dev -= 2.0 * weights(i) * (y(i) * std::log(pi) + (1.0 - y(i)) * std::log1p(-pi));
  }
  return dev;
}

double logistic_nll(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& beta) {
  return loss_value(LossKind::negative_log_likelihood, y, expit(X * beta));
}

Eigen::VectorXd logistic_nll_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& beta) {
  Eigen::VectorXd p = expit(X * beta);
  return X.transpose() * (p - y) / static_cast<double>(y.size());
}

namespace {

// LDLT solve with escalating diagonal jitter; flags when jitter was needed.
Eigen::VectorXd solve_spd(Eigen::MatrixXd H, const Eigen::VectorXd& b, bool* ridged) {
  const double scale = H.diagonal().cwiseAbs().maxCoeff() + 1.0;
  double jitter = 0.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    Eigen::MatrixXd Hj = H;
    if (jitter > 0.0) Hj.diagonal().array() += jitter;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Hj);
    Eigen::VectorXd x = ldlt.solve(b);
    double resid = (Hj * x - b).norm();
    if (x.allFinite() && resid <= 1e-6 * (b.norm() + 1.0)) {
      if (jitter > 0.0 && ridged) *ridged = true;
      return x;
    }
    jitter = jitter == 0.0 ? 1e-10 * scale : jitter * 100.0;
  }
  if (ridged) *ridged = true;
  return Eigen::VectorXd::Zero(b.size());
}

}  // namespace

IrlsFit irls_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& weights, const Eigen::VectorXd& offset,
                      const IrlsOptions& opt) {
  const Eigen::Index n = X.rows(), p = X.cols();
  IrlsFit fit;
  fit.beta = Eigen::VectorXd::Zero(p);

  Eigen::VectorXd eta = offset;
  Eigen::VectorXd mu = expit(eta);
  double dev = binomial_deviance(y, mu, weights);
  double prev_dev = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    fit.iterations = iter;
    double score_max = (X.transpose() * (weights.cwiseProduct(y - mu))).cwiseAbs().maxCoeff();
    bool score_ok = opt.score_tol <= 0.0 || score_max < opt.score_tol;
    bool dev_ok = std::abs(prev_dev - dev) < opt.dev_tol * (std::abs(dev) + 1.0);
    if (iter > 0 && dev_ok && score_ok) {
      fit.converged = true;
      break;
    }

    Eigen::VectorXd score = X.transpose() * (weights.cwiseProduct(y - mu));
    Eigen::VectorXd wdiag(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      wdiag(i) = std::max(weights(i) * mu(i) * (1.0 - mu(i)), 1e-10);
    }
    Eigen::MatrixXd H = X.transpose() * wdiag.asDiagonal() * X;
    Eigen::VectorXd step = solve_spd(H, score, &fit.ridged);

    // Step-halving keeps the deviance from rising beyond rounding noise.
    double t = 1.0;
    Eigen::VectorXd beta_new, eta_new, mu_new;
    double dev_new = dev;
    bool improved = false;
    for (int h = 0; h < 40; ++h) {
      beta_new = fit.beta + t * step;
      eta_new = offset + X * beta_new;
      mu_new = expit(eta_new);
      dev_new = binomial_deviance(y, mu_new, weights);
      if (dev_new <= dev + 1e-10 * (std::abs(dev) + 1.0) && beta_new.allFinite()) {
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) {
      // No representable step lowers the deviance: the iterate sits on the
      // numerical optimum plateau.
      fit.converged = score_ok;
      break;
    }
    prev_dev = dev;
    fit.beta = beta_new;
    eta = eta_new;
    mu = mu_new;
    dev = dev_new;

    if ((X * fit.beta).cwiseAbs().maxCoeff() > opt.eta_cap) {
      fit.separated = true;
      fit.converged = false;
      break;
    }
  }

  fit.deviance = dev;
  Eigen::VectorXd wfinal(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    wfinal(i) = weights(i) * mu(i) * (1.0 - mu(i));
  }
  fit.information = X.transpose() * wfinal.asDiagonal() * X;
  return fit;
}

WlsFit weighted_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& weights) {
  WlsFit fit;
  Eigen::MatrixXd H = X.transpose() * weights.asDiagonal() * X;
  Eigen::VectorXd b = X.transpose() * (weights.cwiseProduct(y));
  fit.beta = solve_spd(std::move(H), b, &fit.ridged);
  return fit;
}

// ---------------------------------------------------------------------------
// LearnerSpec
// ---------------------------------------------------------------------------

std::string to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::intercept_only: return "intercept_only";
    case LearnerKind::linear: return "linear";
    case LearnerKind::logistic: return "logistic";
    case LearnerKind::lasso_logistic: return "lasso_logistic";
    case LearnerKind::spline_logistic: return "spline_logistic";
    case LearnerKind::boosted_stumps: return "boosted_stumps";
  }
  return "?";
}

namespace {

LearnerKind learner_kind_from_string(const std::string& s) {
  if (s == "intercept_only") return LearnerKind::intercept_only;
  if (s == "linear") return LearnerKind::linear;
  if (s == "logistic") return LearnerKind::logistic;
  if (s == "lasso_logistic") return LearnerKind::lasso_logistic;
  if (s == "spline_logistic") return LearnerKind::spline_logistic;
  if (s == "boosted_stumps") return LearnerKind::boosted_stumps;
  throw ConfigError("unknown learner: " + s);
}

struct HyperRule {
  const char* key;
  double min;
  double max;
  bool integer;
};

const std::map<LearnerKind, std::vector<HyperRule>>& hyper_rules() {
  static const std::map<LearnerKind, std::vector<HyperRule>> rules = {
      {LearnerKind::intercept_only, {}},
      {LearnerKind::linear, {}},
      {LearnerKind::logistic, {}},
      {LearnerKind::lasso_logistic,
       {{"nlambda", 2, 1000, true},
        {"lambda_min_ratio", 1e-8, 0.999, false},
        {"cv_folds", 2, 100, true},
        {"cv_seed", 0, 9e18, true}}},
      {LearnerKind::spline_logistic, {{"knots", 0, 100, true}}},
      {LearnerKind::boosted_stumps, {{"rounds", 0, 100000, true}, {"lr", 1e-6, 10, false}}},
  };
  return rules;
}

}  // namespace

LearnerSpec LearnerSpec::make(LearnerKind kind, std::map<std::string, double> hyper) {
  const auto& rules = hyper_rules().at(kind);
  for (const auto& [key, value] : hyper) {
    auto it = std::find_if(rules.begin(), rules.end(),
                           [&](const HyperRule& r) { return key == r.key; });
    if (it == rules.end()) {
      throw ConfigError("learner " + to_string(kind) + ": unknown hyperparameter '" + key + "'");
    }
    if (value < it->min || value > it->max) {
      throw ConfigError("learner " + to_string(kind) + ": hyperparameter '" + key +
                        "' out of range");
    }
    if (it->integer && value != std::floor(value)) {
      throw ConfigError("learner " + to_string(kind) + ": hyperparameter '" + key +
                        "' must be an integer");
    }
  }
  LearnerSpec spec;
  spec.kind = kind;
  spec.hyper = std::move(hyper);
  return spec;
}

LearnerSpec LearnerSpec::parse(const std::string& text) {
  auto colon = text.find(':');
  std::string kind_str = text.substr(0, colon);
  std::map<std::string, double> hyper;
  if (colon != std::string::npos) {
    std::string rest = text.substr(colon + 1);
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("learner spec '" + text + "': expected key=value, got '" + item + "'");
      }
      std::string key = item.substr(0, eq);
      try {
        hyper[key] = std::stod(item.substr(eq + 1));
      } catch (const std::exception&) {
        throw ConfigError("learner spec '" + text + "': bad numeric value in '" + item + "'");
      }
    }
  }
  return make(learner_kind_from_string(kind_str), std::move(hyper));
}

std::string LearnerSpec::name() const {
  std::string s = to_string(kind);
  if (!hyper.empty()) {
    s += ':';
    bool first = true;
    for (const auto& [k, v] : hyper) {
      if (!first) s += ',';
      first = false;
      std::ostringstream os;
      os << k << '=' << v;
      s += os.str();
    }
  }
  return s;
}

double LearnerSpec::get(const std::string& key, double fallback) const {
  auto it = hyper.find(key);
  return it == hyper.end() ? fallback : it->second;
}

// ---------------------------------------------------------------------------
// fit / predict
// ---------------------------------------------------------------------------

namespace {

bool is_binary(const Eigen::VectorXd& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) return false;
  }
  return true;
}

void require_binary(const Eigen::VectorXd& y, LearnerKind kind) {
  if (!is_binary(y)) {
    throw DataError("learner " + to_string(kind) + " requires a binary response");
  }
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Z(X.rows(), X.cols() + 1);
  Z.col(0).setOnes();
  Z.rightCols(X.cols()) = X;
  return Z;
}

double weighted_mean(const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  return y.cwiseProduct(w).sum() / w.sum();
}

// Learner-level IRLS runs past the deviance plateau until the score is tiny,
// so near-saturated fits land within ~1e-11 of their limiting predictions.
IrlsOptions learner_irls_options() {
  IrlsOptions opt;
  opt.dev_tol = 1e-8;
  opt.score_tol = 1e-11;
  return opt;
}

LearnerFit fit_intercept_only(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                              const Eigen::VectorXd* offset) {
  LearnerFit fit;
  fit.spec = spec;
  fit.n_features = X.cols();
  bool binary = is_binary(y);
  if (offset) {
    require_binary(y, spec.kind);
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(X.rows(), 1);
    IrlsFit glm = irls_logistic(ones, y, w, *offset, learner_irls_options());
    fit.model = GlmModel{glm.beta, true};
    fit.converged = glm.converged;
    fit.used_offset = true;
    fit.training_loss =
        loss_value(LossKind::negative_log_likelihood, y, expit(*offset + glm.beta(0) * Eigen::VectorXd::Ones(y.size())));
    return fit;
  }
  double m = weighted_mean(y, w);
  Eigen::VectorXd beta(1);
  if (binary) {
    beta(0) = logit(clip(m, kProbClip, 1.0 - kProbClip));
    fit.model = GlmModel{beta, true};
    fit.training_loss = loss_value(LossKind::negative_log_likelihood, y,
                                   Eigen::VectorXd::Constant(y.size(), m));
  } else {
    beta(0) = m;
    fit.model = GlmModel{beta, false};
    fit.training_loss =
        loss_value(LossKind::squared_error, y, Eigen::VectorXd::Constant(y.size(), m));
  }
  return fit;
}

LearnerFit fit_linear(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                      const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  LearnerFit fit;
  fit.spec = spec;
  fit.n_features = X.cols();
  Eigen::MatrixXd Z = with_intercept(X);
  WlsFit wls = weighted_least_squares(Z, y, w);
  if (wls.ridged) {
    fit.warnings.push_back("linear: singular design, ridge jitter applied");
  }
  fit.model = GlmModel{wls.beta, false};
  fit.training_loss = loss_value(LossKind::squared_error, y, Z * wls.beta);
  return fit;
}

LearnerFit fit_logistic(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                        const Eigen::VectorXd* offset) {
  require_binary(y, spec.kind);
  LearnerFit fit;
  fit.spec = spec;
  fit.n_features = X.cols();
  Eigen::MatrixXd Z = with_intercept(X);
  Eigen::VectorXd off = offset ? *offset : Eigen::VectorXd::Zero(y.size());
  IrlsFit glm = irls_logistic(Z, y, w, off, learner_irls_options());
  fit.converged = glm.converged;
  fit.used_offset = offset != nullptr;
  if (glm.separated) {
    fit.warnings.push_back("logistic: data separated, coefficients capped");
  } else if (!glm.converged) {
    fit.warnings.push_back("logistic: IRLS did not converge");
  }
  if (glm.ridged) {
    fit.warnings.push_back("logistic: singular information matrix, ridge jitter applied");
  }
  fit.model = GlmModel{glm.beta, true};
  fit.training_loss = loss_value(LossKind::negative_log_likelihood, y, expit(off + Z * glm.beta));
  return fit;
}

// --- splines ---

std::vector<double> spline_knots(const Eigen::VectorXd& x, int interior) {
  std::vector<double> vals(x.data(), x.data() + x.size());
  std::vector<double> knots;
  double lo = *std::min_element(vals.begin(), vals.end());
  double hi = *std::max_element(vals.begin(), vals.end());
  knots.push_back(lo);
  for (int i = 1; i <= interior; ++i) {
    knots.push_back(quantile(vals, static_cast<double>(i) / (interior + 1)));
  }
  knots.push_back(hi);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  return knots;
}

int spline_dim(const SplineBasis& b) {
  if (!b.is_spline) return 1;
  return 1 + std::max<int>(0, static_cast<int>(b.knots.size()) - 2);
}

Eigen::MatrixXd spline_expand(const Eigen::MatrixXd& X, const std::vector<SplineBasis>& cols) {
  int total = 0;
  for (const auto& b : cols) total += spline_dim(b);
  Eigen::MatrixXd Z(X.rows(), total);
  int at = 0;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const auto& b = cols[j];
    int d = spline_dim(b);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      if (!b.is_spline) {
        Z(i, at) = X(i, static_cast<Eigen::Index>(j));
      } else {
        Eigen::VectorXd v = natural_spline_basis(X(i, static_cast<Eigen::Index>(j)), b.knots);
        Z.block(i, at, 1, d) = v.head(d).transpose();
      }
    }
    at += d;
  }
  return Z;
}

LearnerFit fit_spline_logistic(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                               const Eigen::VectorXd* offset) {
  require_binary(y, spec.kind);
  int interior = static_cast<int>(spec.get("knots", 3));

  SplineModel model;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    SplineBasis b;
    std::set<double> distinct(X.col(j).data(), X.col(j).data() + X.rows());
    if (static_cast<int>(distinct.size()) > 2 && interior > 0) {
      b.knots = spline_knots(X.col(j), interior);
      b.is_spline = b.knots.size() >= 3;  // need at least one interior knot left
    }
    model.columns.push_back(std::move(b));
  }

  Eigen::MatrixXd Z = with_intercept(spline_expand(X, model.columns));
  Eigen::VectorXd off = offset ? *offset : Eigen::VectorXd::Zero(y.size());
  IrlsFit glm = irls_logistic(Z, y, w, off, learner_irls_options());

  LearnerFit fit;
  fit.spec = spec;
  fit.n_features = X.cols();
  fit.converged = glm.converged;
  fit.used_offset = offset != nullptr;
  if (glm.separated) fit.warnings.push_back("spline_logistic: data separated");
  if (glm.ridged) fit.warnings.push_back("spline_logistic: ridge jitter applied");
  model.glm = GlmModel{glm.beta, true};
  fit.training_loss = loss_value(LossKind::negative_log_likelihood, y, expit(off + Z * glm.beta));
  fit.model = std::move(model);
  return fit;
}

// --- boosted stumps ---

LearnerFit fit_boosted_stumps(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                              const Eigen::VectorXd* offset) {
  require_binary(y, spec.kind);
  const int rounds = static_cast<int>(spec.get("rounds", 100));
  const double lr = spec.get("lr", 0.1);
  const Eigen::Index n = X.rows(), p = X.cols();
  constexpr double kHessFloor = 1e-12;
  constexpr double kLeafCap = 10.0;

  StumpModel model;
  model.base = logit(clip(weighted_mean(y, w), kProbClip, 1.0 - kProbClip));

  Eigen::VectorXd F = Eigen::VectorXd::Constant(n, model.base);
  if (offset) F += *offset;

  // Sort orders are computed once; splits fall between distinct values.
  std::vector<std::vector<Eigen::Index>> order(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    auto& ord = order[static_cast<std::size_t>(j)];
    ord.resize(static_cast<std::size_t>(n));
    std::iota(ord.begin(), ord.end(), Eigen::Index(0));
    std::stable_sort(ord.begin(), ord.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return X(a, j) < X(b, j); });
  }

  for (int r = 0; r < rounds; ++r) {
    Eigen::VectorXd mu = expit(F);
    Eigen::VectorXd grad = w.cwiseProduct(y - mu);
    Eigen::VectorXd hess = w.cwiseProduct(mu.cwiseProduct(Eigen::VectorXd::Ones(n) - mu));
    double total_g = grad.sum(), total_h = hess.sum();
    double base_gain = total_g * total_g / (total_h + kHessFloor);

    double best_gain = 0.0;
    Stump best;
    bool found = false;
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto& ord = order[static_cast<std::size_t>(j)];
      double gl = 0.0, hl = 0.0;
      for (Eigen::Index k = 0; k + 1 < n; ++k) {
        Eigen::Index i = ord[static_cast<std::size_t>(k)];
        gl += grad(i);
        hl += hess(i);
        double v = X(i, j), v_next = X(ord[static_cast<std::size_t>(k + 1)], j);
        if (v == v_next) continue;
        double gr = total_g - gl, hr = total_h - hl;
        double gain = gl * gl / (hl + kHessFloor) + gr * gr / (hr + kHessFloor) - base_gain;
        if (gain > best_gain + 1e-15) {
          best_gain = gain;
          best.feature = static_cast<int>(j);
          best.threshold = 0.5 * (v + v_next);
          best.left = lr * clip(gl / (hl + kHessFloor), -kLeafCap, kLeafCap);
          best.right = lr * clip(gr / (hr + kHessFloor), -kLeafCap, kLeafCap);
          found = true;
        }
      }
    }
    if (!found || best_gain <= 1e-12) break;

    for (Eigen::Index i = 0; i < n; ++i) {
      F(i) += X(i, best.feature) <= best.threshold ? best.left : best.right;
    }
    model.stumps.push_back(best);
  }

  LearnerFit fit;
  fit.spec = spec;
  fit.n_features = p;
  fit.used_offset = offset != nullptr;
  fit.training_loss = loss_value(LossKind::negative_log_likelihood, y, expit(F));
  fit.model = std::move(model);
  return fit;
}

}  // namespace

// Defined in lasso.cpp.
LearnerFit fit_lasso_learner(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                             const Eigen::VectorXd* offset);

LearnerFit fit(const LearnerSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               const Eigen::VectorXd* weights, const Eigen::VectorXd* offset) {
  if (X.rows() != y.size()) {
    throw DataError("fit: X has " + std::to_string(X.rows()) + " rows but y has " +
                    std::to_string(y.size()));
  }
  if (y.size() == 0) throw DataError("fit: empty training data");
  Eigen::VectorXd w = weights ? *weights : Eigen::VectorXd::Ones(y.size());
  if (weights) {
    if (w.size() != y.size()) throw DataError("fit: weight length mismatch");
    if ((w.array() < 0).any()) throw DataError("fit: negative weights");
    if (w.sum() <= 0) throw DataError("fit: all weights zero");
  }
  if (offset && offset->size() != y.size()) throw DataError("fit: offset length mismatch");
  if (offset && spec.kind == LearnerKind::linear) {
    throw DataError("fit: offsets are only supported for logistic-family learners");
  }

  switch (spec.kind) {
    case LearnerKind::intercept_only: return fit_intercept_only(spec, X, y, w, offset);
    case LearnerKind::linear: return fit_linear(spec, X, y, w);
    case LearnerKind::logistic: return fit_logistic(spec, X, y, w, offset);
    case LearnerKind::lasso_logistic: return fit_lasso_learner(spec, X, y, w, offset);
    case LearnerKind::spline_logistic: return fit_spline_logistic(spec, X, y, w, offset);
    case LearnerKind::boosted_stumps: return fit_boosted_stumps(spec, X, y, w, offset);
  }
  throw ConfigError("unhandled learner kind");
}

Eigen::VectorXd natural_spline_basis(double x, const std::vector<double>& knots) {
  const int K = static_cast<int>(knots.size());
  Eigen::VectorXd out(std::max(1, K - 1));
  out(0) = x;
  if (K < 3) return out;
  auto cube_pos = [](double v) { return v > 0.0 ? v * v * v : 0.0; };
  auto d = [&](int k) {
    return (cube_pos(x - knots[static_cast<std::size_t>(k)]) -
            cube_pos(x - knots[static_cast<std::size_t>(K - 1)])) /
           (knots[static_cast<std::size_t>(K - 1)] - knots[static_cast<std::size_t>(k)]);
  };
  double dK1 = d(K - 2);
  for (int k = 0; k < K - 2; ++k) {
    out(k + 1) = d(k) - dK1;
  }
  return out;
}

namespace {

Eigen::VectorXd predict_impl(const LearnerFit& fit, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd* offset) {
  if (X.cols() != fit.n_features) {
    throw DataError("predict: expected " + std::to_string(fit.n_features) + " columns, got " +
                    std::to_string(X.cols()));
  }
  if (fit.used_offset != (offset != nullptr)) {
    throw DataError(fit.used_offset ? "predict: model was fit with an offset; supply one"
                                    : "predict: model was fit without an offset");
  }
  Eigen::VectorXd eta;
  bool logistic = true;
  if (const auto* glm = std::get_if<GlmModel>(&fit.model)) {
    if (fit.spec.kind == LearnerKind::intercept_only) {
      eta = Eigen::VectorXd::Constant(X.rows(), glm->beta(0));
    } else {
      eta = with_intercept(X) * glm->beta;
    }
    logistic = glm->logistic;
  } else if (const auto* spl = std::get_if<SplineModel>(&fit.model)) {
    eta = with_intercept(spline_expand(X, spl->columns)) * spl->glm.beta;
  } else if (const auto* las = std::get_if<LassoModel>(&fit.model)) {
    eta = with_intercept(X) * las->glm.beta;
    logistic = las->glm.logistic;
  } else {
    const auto& stumps = std::get<StumpModel>(fit.model);
    eta = Eigen::VectorXd::Constant(X.rows(), stumps.base);
    for (const auto& s : stumps.stumps) {
      for (Eigen::Index i = 0; i < X.rows(); ++i) {
        eta(i) += X(i, s.feature) <= s.threshold ? s.left : s.right;
      }
    }
  }
  if (offset) eta += *offset;
  return logistic ? expit(eta) : eta;
}

}  // namespace

Eigen::VectorXd predict(const LearnerFit& fit, const Eigen::MatrixXd& X) {
  return predict_impl(fit, X, nullptr);
}

Eigen::VectorXd predict(const LearnerFit& fit, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& offset) {
  return predict_impl(fit, X, &offset);
}

}  // namespace tl
