#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tl/data.hpp"
#include "tl/learners.hpp"
#include "tl/sim.hpp"

namespace tl {

// Parsed INI-style file: [section] headers, key = value lines, # or ;
// comments. Order-preserving; duplicate keys or sections are errors.
struct IniSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;
  int line = 0;

  const std::string* get(const std::string& key) const;
};
struct IniFile {
  std::vector<IniSection> sections;

  static IniFile parse_file(const std::string& path);
  static IniFile parse_string(const std::string& text, const std::string& origin);
  const IniSection* find(const std::string& name) const;
};

struct EstimationConfig {
  std::vector<LearnerSpec> q_library;   // default roster set in parse
  std::vector<LearnerSpec> g_library;
  int V = 20;
  LossKind loss = LossKind::negative_log_likelihood;
  std::optional<double> g_bound;        // 0 disables truncation
  std::vector<std::string> q_interactions;
  bool stratify_folds = true;
  std::vector<std::string> baseline_formula;  // parametric-baseline covariates (optional)
};

struct DiagnosticsConfig {
  std::vector<std::string> stratifiers;
  std::optional<std::vector<double>> dose_bins;
};

struct SensitivityConfig {
  bool auto_grid = true;
  double grid_min = 0.0, grid_max = 0.0;
  int grid_points = 41;
};

struct SimulationConfig {
  std::size_t n = 1000;
  int reps = 100;
  std::size_t mc_size = 1000000;
  std::uint64_t oracle_seed = 42;
};

// One file fully determines a run. Unknown sections or keys are rejected so
// a typo cannot silently change an analysis.
struct RunConfig {
  std::string question;
  std::optional<std::string> data_path;
  std::string output_dir = "tlearn_out";
  std::uint64_t seed = 20170704;
  int threads = 1;

  std::vector<ColumnSpec> columns;
  std::vector<std::string> adjustment;
  std::vector<std::string> g_adjustment;  // empty = same as adjustment
  std::vector<std::pair<std::string, std::map<std::string, std::string>>> recodes;

  EstimationConfig estimation;
  DiagnosticsConfig diagnostics;
  SensitivityConfig sensitivity;

  std::optional<DgpSpec> dgp;
  std::optional<SimulationConfig> simulation;
  std::vector<EstimatorConfig> estimators;

  static RunConfig parse_file(const std::string& path);
  static RunConfig parse(const IniFile& ini);
};

// Shared list syntax: items separated by commas and/or whitespace.
std::vector<std::string> split_list(const std::string& s);
// Learner libraries are whitespace-separated because entries may carry
// comma-separated hyperparameters ("boosted_stumps:rounds=200,lr=0.05").
std::vector<LearnerSpec> parse_library(const std::string& s);

}  // namespace tl
