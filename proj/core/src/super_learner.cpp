#include "tl/super_learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "tl/math.hpp"
#include "tl/rng.hpp"

namespace tl {

std::vector<int> FoldAssignment::sizes() const {
  std::vector<int> s(static_cast<std::size_t>(V), 0);
  for (int f : fold) s[static_cast<std::size_t>(f)]++;
  return s;
}

FoldAssignment make_folds(std::size_t n, int V, std::uint64_t seed,
                          const std::vector<int>* strata, const std::string& strata_name) {
  if (V < 2) throw ConfigError("make_folds: V must be at least 2");
  if (static_cast<std::size_t>(V) > n) {
    throw ConfigError("make_folds: V=" + std::to_string(V) + " exceeds n=" + std::to_string(n));
  }
  if (strata && strata->size() != n) throw ConfigError("make_folds: strata length mismatch");

  FoldAssignment fa;
  fa.V = V;
  fa.seed = seed;
  fa.fold.assign(n, -1);
  if (!strata_name.empty()) fa.stratified_on = strata_name;

  // Group indices by stratum label (single stratum if none given).
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) {
    groups[strata ? (*strata)[i] : 0].push_back(i);
  }
  if (strata) {
    for (const auto& [label, members] : groups) {
      if (members.size() < 2) {
        throw ConfigError("make_folds: stratum " + std::to_string(label) +
                          " has fewer than 2 members");
      }
    }
  }

  // Round-robin deal within each stratum, with the starting fold rotating by
  // the running count so overall fold sizes also stay within one of each
  // other.
  Rng rng(seed);
  std::size_t dealt = 0;
  for (auto& [label, members] : groups) {
    rng.shuffle(members);
    for (std::size_t k = 0; k < members.size(); ++k) {
      fa.fold[members[k]] = static_cast<int>((dealt + k) % static_cast<std::size_t>(V));
    }
    dealt += members.size();
  }
  return fa;
}

namespace {

double fallback_prediction(const Eigen::VectorXd& y_train, LossKind loss) {
  double m = y_train.size() > 0 ? y_train.mean() : 0.5;
  if (loss == LossKind::negative_log_likelihood) m = clip(m, kProbClip, 1.0 - kProbClip);
  return m;
}

}  // namespace

CvPredictions cv_predictions(const std::vector<LearnerSpec>& library, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y, const FoldAssignment& folds,
                             LossKind loss) {
  const Eigen::Index n = X.rows();
  const std::size_t L = library.size();
  if (library.empty()) throw ConfigError("cv_predictions: empty library");
  if (static_cast<std::size_t>(folds.fold.size()) != static_cast<std::size_t>(n)) {
    throw ConfigError("cv_predictions: fold assignment does not match data");
  }

  CvPredictions out;
  out.heldout.resize(n, static_cast<Eigen::Index>(L));
  out.cv_risks.resize(static_cast<Eigen::Index>(L));
  out.dropped.assign(L, false);

  // Pre-split rows per fold.
  std::vector<std::vector<Eigen::Index>> in_fold(static_cast<std::size_t>(folds.V));
  for (Eigen::Index i = 0; i < n; ++i) {
    in_fold[static_cast<std::size_t>(folds.fold[static_cast<std::size_t>(i)])].push_back(i);
  }

  for (std::size_t l = 0; l < L; ++l) {
    int failed_folds = 0;
    for (int f = 0; f < folds.V; ++f) {
      const auto& test = in_fold[static_cast<std::size_t>(f)];
      std::vector<Eigen::Index> train;
      train.reserve(static_cast<std::size_t>(n) - test.size());
      for (Eigen::Index i = 0; i < n; ++i) {
        if (folds.fold[static_cast<std::size_t>(i)] != f) train.push_back(i);
      }
      Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(train.size()), X.cols());
      Eigen::VectorXd ytr(static_cast<Eigen::Index>(train.size()));
      for (std::size_t k = 0; k < train.size(); ++k) {
        Xtr.row(static_cast<Eigen::Index>(k)) = X.row(train[k]);
        ytr(static_cast<Eigen::Index>(k)) = y(train[k]);
      }
      try {
        LearnerFit f_fit = fit(library[l], Xtr, ytr);
        Eigen::MatrixXd Xte(static_cast<Eigen::Index>(test.size()), X.cols());
        for (std::size_t k = 0; k < test.size(); ++k) {
          Xte.row(static_cast<Eigen::Index>(k)) = X.row(test[k]);
        }
        Eigen::VectorXd pred = predict(f_fit, Xte);
        for (std::size_t k = 0; k < test.size(); ++k) {
          out.heldout(test[k], static_cast<Eigen::Index>(l)) =
              pred(static_cast<Eigen::Index>(k));
        }
      } catch (const Error& e) {
        ++failed_folds;
        double fb = fallback_prediction(ytr, loss);
        for (auto idx : test) out.heldout(idx, static_cast<Eigen::Index>(l)) = fb;
        out.warnings.push_back("learner " + library[l].name() + " failed on fold " +
                               std::to_string(f) + ": " + e.what());
      }
    }
    if (failed_folds == folds.V) {
      out.dropped[l] = true;
      out.cv_risks(static_cast<Eigen::Index>(l)) = std::numeric_limits<double>::quiet_NaN();
      out.warnings.push_back("learner " + library[l].name() +
                             " failed on every fold and was dropped");
    } else {
      if (failed_folds > 0) {
        out.warnings.push_back("learner " + library[l].name() + " used base-rate fallback on " +
                               std::to_string(failed_folds) + " fold(s)");
      }
      out.cv_risks(static_cast<Eigen::Index>(l)) =
          loss_value(loss, y, out.heldout.col(static_cast<Eigen::Index>(l)));
    }
  }
  return out;
}

namespace {

constexpr double kTieBreak = 1e-12;

double ensemble_risk(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, LossKind loss,
                     const Eigen::VectorXd& w) {
  return loss_value(loss, y, Z * w);
}

double objective(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, LossKind loss,
                 const Eigen::VectorXd& w) {
  double tie = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) tie += kTieBreak * static_cast<double>(j) * w(j);
  return ensemble_risk(Z, y, loss, w) + tie;
}

Eigen::VectorXd objective_gradient(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                   LossKind loss, const Eigen::VectorXd& w) {
  const auto n = static_cast<double>(y.size());
  Eigen::VectorXd pred = Z * w;
  Eigen::VectorXd dldp(y.size());
  if (loss == LossKind::squared_error) {
    dldp = 2.0 / n * (pred - y);
  } else {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      double p = clip(pred(i), kProbClip, 1.0 - kProbClip);
      dldp(i) = (p - y(i)) / (p * (1.0 - p)) / n;
    }
  }
  Eigen::VectorXd g = Z.transpose() * dldp;
  for (Eigen::Index j = 0; j < g.size(); ++j) g(j) += kTieBreak * static_cast<double>(j);
  return g;
}

// Euclidean projection onto the probability simplex (sort-based).
Eigen::VectorXd project_simplex(Eigen::VectorXd v) {
  const Eigen::Index d = v.size();
  std::vector<double> u(v.data(), v.data() + d);
  std::sort(u.rbegin(), u.rend());
  double cum = 0.0, theta = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    cum += u[static_cast<std::size_t>(i)];
    double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (u[static_cast<std::size_t>(i)] - t > 0.0) theta = t;
  }
  for (Eigen::Index i = 0; i < d; ++i) v(i) = std::max(0.0, v(i) - theta);
  return v;
}

}  // namespace

Eigen::VectorXd solve_weights(const Eigen::MatrixXd& heldout, const Eigen::VectorXd& y,
                              LossKind loss, std::vector<std::string>* warnings) {
  const Eigen::Index L = heldout.cols();
  if (L == 0) throw ConfigError("solve_weights: no columns");
  Eigen::VectorXd w = Eigen::VectorXd::Constant(L, 1.0 / static_cast<double>(L));
  if (L == 1) {
    w(0) = 1.0;
    return w;
  }
  if (!heldout.allFinite()) {
    if (warnings) warnings->push_back("solve_weights: non-finite predictions, uniform weights");
    return w;
  }

  double f = objective(heldout, y, loss, w);
  for (int iter = 0; iter < 10000; ++iter) {
    Eigen::VectorXd g = objective_gradient(heldout, y, loss, w);
    double step = 1.0;
    Eigen::VectorXd w_new;
    double f_new = f;
    bool improved = false;
    for (int h = 0; h < 40; ++h) {
      w_new = project_simplex(w - step * g);
      f_new = objective(heldout, y, loss, w_new);
      if (f_new < f) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
    double delta = f - f_new;
    w = w_new;
    f = f_new;
    if (delta < 1e-10) break;
  }

  // The simplex optimum can never beat every vertex by construction, but the
  // iterate might stop short; take the best vertex if it wins.
  double best_vertex = std::numeric_limits<double>::infinity();
  Eigen::Index best_j = 0;
  for (Eigen::Index j = 0; j < L; ++j) {
    double r = loss_value(loss, y, heldout.col(j)) + kTieBreak * static_cast<double>(j);
    if (r < best_vertex) {
      best_vertex = r;
      best_j = j;
    }
  }
  if (best_vertex < f) {
    w.setZero();
    w(best_j) = 1.0;
  }
  if (!w.allFinite()) {
    if (warnings) warnings->push_back("solve_weights: solver degenerated, uniform weights");
    w = Eigen::VectorXd::Constant(L, 1.0 / static_cast<double>(L));
  }
  return w;
}

SuperLearnerFit fit_super_learner(const std::vector<LearnerSpec>& library,
                                  const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const FoldAssignment& folds, LossKind loss) {
  if (library.empty()) throw ConfigError("fit_super_learner: empty library");

  SuperLearnerFit sl;
  sl.library = library;
  sl.folds = folds;
  sl.loss = loss;

  CvPredictions cv = cv_predictions(library, X, y, folds, loss);
  sl.cv_risks = cv.cv_risks;
  sl.dropped = cv.dropped;
  sl.warnings = cv.warnings;

  // Full-data refits; a learner that fails here is dropped as well.
  sl.full_fits.resize(library.size());
  for (std::size_t l = 0; l < library.size(); ++l) {
    if (sl.dropped[l]) continue;
    try {
      sl.full_fits[l] = fit(library[l], X, y);
      for (const auto& msg : sl.full_fits[l].warnings) {
        sl.warnings.push_back("learner " + library[l].name() + ": " + msg);
      }
    } catch (const Error& e) {
      sl.dropped[l] = true;
      sl.warnings.push_back("learner " + library[l].name() +
                            " failed on the full data and was dropped: " + e.what());
    }
  }

  std::vector<Eigen::Index> active;
  for (std::size_t l = 0; l < library.size(); ++l) {
    if (!sl.dropped[l]) active.push_back(static_cast<Eigen::Index>(l));
  }
  if (active.empty()) {
    throw EstimationError("super learner: every learner in the library failed");
  }

  Eigen::MatrixXd Z(X.rows(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) {
    Z.col(static_cast<Eigen::Index>(k)) = cv.heldout.col(active[k]);
  }
  Eigen::VectorXd w_active = solve_weights(Z, y, loss, &sl.warnings);

  sl.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(library.size()));
  for (std::size_t k = 0; k < active.size(); ++k) {
    sl.weights(active[k]) = w_active(static_cast<Eigen::Index>(k));
  }
  sl.ensemble_cv_risk = loss_value(loss, y, Z * w_active);
  return sl;
}

Eigen::VectorXd sl_predict(const SuperLearnerFit& fit, const Eigen::MatrixXd& X) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  for (std::size_t l = 0; l < fit.library.size(); ++l) {
    if (fit.dropped[l] || fit.weights(static_cast<Eigen::Index>(l)) == 0.0) continue;
    out += fit.weights(static_cast<Eigen::Index>(l)) * predict(fit.full_fits[l], X);
  }
  return out;
}

}  // namespace tl
