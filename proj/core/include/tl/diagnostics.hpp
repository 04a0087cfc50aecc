#pragma once

#include <Eigen/Core>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "tl/data.hpp"

namespace tl {

// Per-stratum treated/control counts. Computed without ever reading the
// outcome column, so it can run before any outcome model is touched.
struct PositivityCell {
  std::string level;
  std::size_t n_control = 0;
  std::size_t n_treated = 0;
};
struct PositivityTable {
  std::string stratifier;
  std::vector<PositivityCell> cells;   // in level order
  std::vector<std::string> zero_cells;  // levels with an empty arm
};
PositivityTable positivity_table(const Dataset& ds, const std::string& stratifier);

// Mann-Whitney AUC with midrank tie handling, O(n log n).
double c_statistic(const Eigen::VectorXd& g, const Eigen::VectorXd& A);

// Propensity overlap: 20 bins of width 0.05 over [0,1]; the first bin is
// [0, 0.05], the rest are right-closed (lo, hi].
struct OverlapSummary {
  std::array<std::size_t, 20> control_bins{};
  std::array<std::size_t, 20> treated_bins{};
  double c_stat = 0.0;
  double min_control = 0.0, max_control = 0.0;
  double min_treated = 0.0, max_treated = 0.0;
};
OverlapSummary overlap_summary(const Eigen::VectorXd& g, const Eigen::VectorXd& A);

// Crude outcome proportions by dose group. Default edges {0,10,20,30,40,50}
// produce bins {0}, (0,10], ..., (40,50], >50.
struct DoseBin {
  std::string label;
  std::size_t n = 0;
  std::size_t events = 0;
  std::optional<double> proportion;  // absent when n = 0
};
std::vector<DoseBin> crude_dose_table(const Dataset& ds, const std::string& dose_column,
                                      const std::vector<double>& edges = {0, 10, 20, 30, 40, 50});

}  // namespace tl
