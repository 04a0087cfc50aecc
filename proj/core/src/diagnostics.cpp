#include "tl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tl {

PositivityTable positivity_table(const Dataset& ds, const std::string& stratifier) {
  const Column& s = ds.col(stratifier);
  if (s.spec.kind != Kind::categorical) {
    throw DataError("positivity stratifier '" + stratifier + "' must be categorical");
  }
  const Column* a = ds.first_with_role(Role::treatment);
  if (!a) throw DataError("positivity_table: no treatment column");

  PositivityTable t;
  t.stratifier = stratifier;
  t.cells.resize(s.levels.size());
  for (std::size_t l = 0; l < s.levels.size(); ++l) t.cells[l].level = s.levels[l];

  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (s.missing(i) || a->missing(i)) continue;
    auto& cell = t.cells[static_cast<std::size_t>(s.values[i])];
    if (a->values[i] == 1.0) {
      ++cell.n_treated;
    } else {
      ++cell.n_control;
    }
  }
  for (const auto& cell : t.cells) {
    if (cell.n_control == 0 || cell.n_treated == 0) t.zero_cells.push_back(cell.level);
  }
  return t;
}

double c_statistic(const Eigen::VectorXd& g, const Eigen::VectorXd& A) {
  const Eigen::Index n = g.size();
  if (A.size() != n || n == 0) throw DataError("c_statistic: length mismatch");
  double n1 = A.sum();
  double n0 = static_cast<double>(n) - n1;
  if (n1 == 0 || n0 == 0) throw DataError("c_statistic: both arms must be present");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return g(a) < g(b); });

  // Midranks over tie groups; sum the treated ranks.
  double rank_sum_treated = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && g(order[j + 1]) == g(order[i])) ++j;
    double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) {
      if (A(order[k]) == 1.0) rank_sum_treated += midrank;
    }
    i = j + 1;
  }
  double u = rank_sum_treated - n1 * (n1 + 1.0) / 2.0;
  return u / (n1 * n0);
}

namespace {

std::size_t overlap_bin(double g) {
  // First bin [0, 0.05], then right-closed (lo, hi]; the epsilon keeps exact
  // multiples of 0.05 in their closed-upper bin.
  if (g <= 0.05) return 0;
  auto idx = static_cast<long>(std::ceil(g / 0.05 - 1e-12)) - 1;
  return static_cast<std::size_t>(std::clamp(idx, 0l, 19l));
}

}  // namespace

OverlapSummary overlap_summary(const Eigen::VectorXd& g, const Eigen::VectorXd& A) {
  if (g.size() != A.size() || g.size() == 0) throw DataError("overlap_summary: length mismatch");
  OverlapSummary s;
  s.c_stat = c_statistic(g, A);
  s.min_control = s.min_treated = 1.0;
  s.max_control = s.max_treated = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!(g(i) >= 0.0 && g(i) <= 1.0)) {
      throw DataError("overlap_summary: propensity outside [0,1]");
    }
    std::size_t b = overlap_bin(g(i));
    if (A(i) == 1.0) {
      ++s.treated_bins[b];
      s.min_treated = std::min(s.min_treated, g(i));
      s.max_treated = std::max(s.max_treated, g(i));
    } else {
      ++s.control_bins[b];
      s.min_control = std::min(s.min_control, g(i));
      s.max_control = std::max(s.max_control, g(i));
    }
  }
  return s;
}

std::vector<DoseBin> crude_dose_table(const Dataset& ds, const std::string& dose_column,
                                      const std::vector<double>& edges) {
  const Column& dose = ds.col(dose_column);
  if (dose.spec.kind == Kind::categorical) {
    throw DataError("crude_dose_table: dose column must be numeric");
  }
  if (edges.empty() || !std::is_sorted(edges.begin(), edges.end())) {
    throw DataError("crude_dose_table: edges must be ascending");
  }
  const Column* yc = ds.first_with_role(Role::outcome);
  if (!yc) throw DataError("crude_dose_table: no outcome column");

  auto fmt = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };

  std::vector<DoseBin> bins;
  bins.push_back({fmt(edges.front()), 0, 0, std::nullopt});  // exact lowest edge
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    bins.push_back({"(" + fmt(edges[e]) + "," + fmt(edges[e + 1]) + "]", 0, 0, std::nullopt});
  }
  bins.push_back({">" + fmt(edges.back()), 0, 0, std::nullopt});

  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (dose.missing(i) || yc->missing(i)) continue;
    double d = dose.values[i];
    std::size_t b;
    if (d <= edges.front()) {
      b = 0;
    } else if (d > edges.back()) {
      b = bins.size() - 1;
    } else {
      b = 1;
      while (d > edges[b]) ++b;
    }
    ++bins[b].n;
    if (yc->values[i] == 1.0) ++bins[b].events;
  }
  for (auto& b : bins) {
    if (b.n > 0) b.proportion = static_cast<double>(b.events) / static_cast<double>(b.n);
  }
  return bins;
}

}  // namespace tl
