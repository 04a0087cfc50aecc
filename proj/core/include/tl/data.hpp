#pragma once

#include <Eigen/Core>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tl/error.hpp"

namespace tl {

enum class Role { outcome, treatment, covariate, dose, id, ignore };
enum class Timing { baseline, post_treatment, post_outcome };
enum class Kind { binary, continuous, categorical };

std::string to_string(Role r);
std::string to_string(Timing t);
std::string to_string(Kind k);
Role role_from_string(const std::string& s);
Timing timing_from_string(const std::string& s);
Kind kind_from_string(const std::string& s);

// Declared role, timing, and type of one input column.
struct ColumnSpec {
  std::string name;
  Role role = Role::covariate;
  Timing timing = Timing::baseline;
  Kind kind = Kind::continuous;
};

// One typed column. Categorical cells are stored as level indices into
// `levels` (first-appearance order); missing cells are NaN in any kind.
struct Column {
  ColumnSpec spec;
  std::vector<double> values;
  std::vector<std::string> levels;

  bool missing(std::size_t i) const { return std::isnan(values[i]); }
  std::string level_of(std::size_t i) const;
};

struct Finding {
  std::string code;
  std::string column;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> errors;
  std::vector<Finding> warnings;
  std::size_t rows_dropped = 0;

  bool ok() const { return errors.empty(); }
  void error(std::string code, std::string column, std::string message) {
    errors.push_back({std::move(code), std::move(column), std::move(message)});
  }
  void warn(std::string code, std::string column, std::string message) {
    warnings.push_back({std::move(code), std::move(column), std::move(message)});
  }
};

// Immutable-after-construction cohort table. All transforms return copies;
// read-only sharing across threads is safe.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Column> columns, std::size_t n);

  std::size_t n() const { return n_; }
  const std::vector<Column>& columns() const { return cols_; }

  bool has(const std::string& name) const { return find(name) != nullptr; }
  const Column* find(const std::string& name) const;
  const Column& col(const std::string& name) const;  // throws DataError
  const Column* first_with_role(Role r) const;

  Eigen::VectorXd numeric(const std::string& name) const;

  void add_column(Column c);  // throws on name clash or length mismatch

 private:
  std::vector<Column> cols_;
  std::size_t n_ = 0;
};

// Reads and types a CSV cohort per `specs`. Enforces: exactly one outcome
// spec; at most one treatment and one dose spec, at least one of the two;
// every spec name present in the header; binary columns contain only {0,1}
// (missing allowed, reported later by validate).
Dataset load_dataset(const std::string& csv_path, const std::vector<ColumnSpec>& specs);

// Outcome-preceding-cause and completeness checks. Pure: reports what is
// wrong and what complete_cases would drop, never mutates.
ValidationReport validate(const Dataset& ds, const std::vector<std::string>& adjustment_set);

// Drops rows with a missing value in any of the given columns.
Dataset complete_cases(const Dataset& ds, const std::vector<std::string>& columns,
                       std::size_t* dropped = nullptr);

// Adds a binary column named "treated" (1 iff dose > 0). The dose column
// keeps role=dose for the crude dose diagnostics.
Dataset dichotomize_treatment(const Dataset& ds, const std::string& dose_column,
                              ValidationReport* report = nullptr);

// Merges levels of a categorical column; every observed level must be mapped.
Dataset recode_categories(const Dataset& ds, const std::string& column,
                          const std::map<std::string, std::string>& mapping);

// Numeric design for the learner boundary: binary/continuous columns pass
// through, categorical columns expand to indicators against a
// first-appearance reference level. Throws on missing values.
struct Design {
  Eigen::MatrixXd X;
  std::vector<std::string> names;
};
Design build_design(const Dataset& ds, const std::vector<std::string>& columns);

// Names of the columns an analysis touches: outcome, treatment, dose (when
// present), and the adjustment set.
std::vector<std::string> analysis_columns(const Dataset& ds,
                                          const std::vector<std::string>& adjustment_set);

}  // namespace tl
