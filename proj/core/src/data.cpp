#include "tl/data.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <set>
#include <sstream>

#include "tl/csv.hpp"

namespace tl {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string to_string(Role r) {
  switch (r) {
    case Role::outcome: return "outcome";
    case Role::treatment: return "treatment";
    case Role::covariate: return "covariate";
    case Role::dose: return "dose";
    case Role::id: return "id";
    case Role::ignore: return "ignore";
  }
  return "?";
}

std::string to_string(Timing t) {
  switch (t) {
    case Timing::baseline: return "baseline";
    case Timing::post_treatment: return "post_treatment";
    case Timing::post_outcome: return "post_outcome";
  }
  return "?";
}

std::string to_string(Kind k) {
  switch (k) {
    case Kind::binary: return "binary";
    case Kind::continuous: return "continuous";
    case Kind::categorical: return "categorical";
  }
  return "?";
}

Role role_from_string(const std::string& s) {
  if (s == "outcome") return Role::outcome;
  if (s == "treatment") return Role::treatment;
  if (s == "covariate") return Role::covariate;
  if (s == "dose") return Role::dose;
  if (s == "id") return Role::id;
  if (s == "ignore") return Role::ignore;
  throw ConfigError("unknown column role: " + s);
}

Timing timing_from_string(const std::string& s) {
  if (s == "baseline") return Timing::baseline;
  if (s == "post_treatment") return Timing::post_treatment;
  if (s == "post_outcome") return Timing::post_outcome;
  throw ConfigError("unknown column timing: " + s);
}

Kind kind_from_string(const std::string& s) {
  if (s == "binary") return Kind::binary;
  if (s == "continuous") return Kind::continuous;
  if (s == "categorical") return Kind::categorical;
  throw ConfigError("unknown column kind: " + s);
}

std::string Column::level_of(std::size_t i) const {
  if (missing(i)) return "";
  auto idx = static_cast<std::size_t>(values[i]);
  return idx < levels.size() ? levels[idx] : "";
}

Dataset::Dataset(std::vector<Column> columns, std::size_t n)
    : cols_(std::move(columns)), n_(n) {
  for (const auto& c : cols_) {
    if (c.values.size() != n_) {
      throw DataError("column '" + c.spec.name + "' has " +
                      std::to_string(c.values.size()) + " values, expected " +
                      std::to_string(n_));
    }
  }
}

const Column* Dataset::find(const std::string& name) const {
  for (const auto& c : cols_) {
    if (c.spec.name == name) return &c;
  }
  return nullptr;
}

const Column& Dataset::col(const std::string& name) const {
  const Column* c = find(name);
  if (!c) throw DataError("no such column: " + name);
  return *c;
}

const Column* Dataset::first_with_role(Role r) const {
  for (const auto& c : cols_) {
    if (c.spec.role == r) return &c;
  }
  return nullptr;
}

Eigen::VectorXd Dataset::numeric(const std::string& name) const {
  const Column& c = col(name);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i) v(static_cast<Eigen::Index>(i)) = c.values[i];
  return v;
}

void Dataset::add_column(Column c) {
  if (find(c.spec.name)) {
    throw DataError("column already exists: " + c.spec.name);
  }
  if (c.values.size() != n_) {
    throw DataError("column '" + c.spec.name + "' length mismatch");
  }
  cols_.push_back(std::move(c));
}

namespace {

bool parse_double(const std::string& s, double* out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, *out);
  return ec == std::errc() && ptr == last;
}

void check_spec_roles(const std::vector<ColumnSpec>& specs) {
  int outcomes = 0, treatments = 0, doses = 0;
  std::set<std::string> names;
  for (const auto& s : specs) {
    if (!names.insert(s.name).second) {
      throw ConfigError("duplicate column spec: " + s.name);
    }
    if (s.role == Role::outcome) ++outcomes;
    if (s.role == Role::treatment) ++treatments;
    if (s.role == Role::dose) ++doses;
  }
  if (outcomes != 1) {
    throw ConfigError("exactly one outcome column required, got " +
                      std::to_string(outcomes));
  }
  if (treatments > 1 || doses > 1) {
    throw ConfigError("at most one treatment and one dose column allowed");
  }
  if (treatments + doses == 0) {
    throw ConfigError("a treatment or dose column is required");
  }
}

}  // namespace

Dataset load_dataset(const std::string& csv_path, const std::vector<ColumnSpec>& specs) {
  check_spec_roles(specs);
  CsvTable t = read_csv(csv_path);

  std::map<std::string, std::size_t> header_index;
  for (std::size_t i = 0; i < t.header.size(); ++i) header_index[t.header[i]] = i;

  for (const auto& s : specs) {
    if (!header_index.count(s.name)) {
      throw DataError("column '" + s.name + "' not found in header of " + csv_path);
    }
  }
  if (t.rows.empty()) {
    throw DataError("no data rows in " + csv_path);
  }

  std::vector<Column> cols;
  for (const auto& s : specs) {
    if (s.role == Role::ignore) continue;
    Column c;
    c.spec = s;
    c.values.reserve(t.rows.size());
    std::size_t src = header_index[s.name];
    std::map<std::string, std::size_t> level_index;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const std::string& cell = t.rows[r][src];
      if (cell.empty()) {
        c.values.push_back(kNaN);
        continue;
      }
      if (s.kind == Kind::categorical || s.role == Role::id) {
        auto it = level_index.find(cell);
        if (it == level_index.end()) {
          it = level_index.emplace(cell, c.levels.size()).first;
          c.levels.push_back(cell);
        }
        c.values.push_back(static_cast<double>(it->second));
        continue;
      }
      double v;
      if (!parse_double(cell, &v)) {
        throw DataError("unparseable value '" + cell + "' in column '" + s.name +
                        "', row " + std::to_string(r + 1));
      }
      if (s.kind == Kind::binary && v != 0.0 && v != 1.0) {
        throw DataError("binary column '" + s.name + "' contains " + cell +
                        " at row " + std::to_string(r + 1));
      }
      c.values.push_back(v);
    }
    cols.push_back(std::move(c));
  }
  return Dataset(std::move(cols), t.rows.size());
}

namespace {

bool is_binary_01(const Column& c) {
  for (double v : c.values) {
    if (std::isnan(v)) continue;
    if (v != 0.0 && v != 1.0) return false;
  }
  return true;
}

}  // namespace

ValidationReport validate(const Dataset& ds, const std::vector<std::string>& adjustment_set) {
  ValidationReport rep;

  const Column* outcome = ds.first_with_role(Role::outcome);
  if (!outcome) {
    rep.error("NO_OUTCOME", "", "dataset has no outcome column");
  } else if (!is_binary_01(*outcome)) {
    rep.error("NOT_BINARY", outcome->spec.name, "outcome column must contain only {0,1}");
  }

  const Column* treatment = ds.first_with_role(Role::treatment);
  if (!treatment) {
    rep.error("NO_TREATMENT", "",
              "dataset has no treatment column (dichotomize the dose column first)");
  } else if (!is_binary_01(*treatment)) {
    rep.error("NOT_BINARY", treatment->spec.name, "treatment column must contain only {0,1}");
  }

  for (const auto& name : adjustment_set) {
    const Column* c = ds.find(name);
    if (!c) {
      rep.error("UNKNOWN_COLUMN", name, "adjustment column not in dataset");
      continue;
    }
    if (outcome && c == outcome) {
      rep.error("ROLE_CONFLICT", name, "outcome column cannot be in the adjustment set");
      continue;
    }
    if (treatment && c == treatment) {
      rep.error("ROLE_CONFLICT", name, "treatment column cannot be in the adjustment set");
      continue;
    }
    if (c->spec.timing != Timing::baseline) {
      rep.error("TIMING_VIOLATION", name,
                "adjustment column '" + name + "' has timing " + to_string(c->spec.timing) +
                    "; a cause must precede the outcome, so only baseline covariates may be adjusted for");
    }
  }

  // Completeness scan over the columns the analysis will read.
  std::vector<std::string> cols = analysis_columns(ds, adjustment_set);
  std::vector<std::size_t> incomplete;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (const auto& name : cols) {
      const Column* c = ds.find(name);
      if (c && c->missing(i)) {
        incomplete.push_back(i);
        break;
      }
    }
  }
  if (!incomplete.empty()) {
    std::ostringstream msg;
    msg << incomplete.size() << " row(s) with missing analysis values dropped (rows";
    for (std::size_t k = 0; k < incomplete.size() && k < 10; ++k) {
      msg << ' ' << incomplete[k] + 1;
    }
    if (incomplete.size() > 10) msg << " ...";
    msg << ")";
    rep.warn("MISSING_VALUES", "", msg.str());
    rep.rows_dropped = incomplete.size();
  }
  return rep;
}

std::vector<std::string> analysis_columns(const Dataset& ds,
                                          const std::vector<std::string>& adjustment_set) {
  std::vector<std::string> cols;
  auto push_role = [&](Role r) {
    if (const Column* c = ds.first_with_role(r)) cols.push_back(c->spec.name);
  };
  push_role(Role::outcome);
  push_role(Role::treatment);
  push_role(Role::dose);
  for (const auto& name : adjustment_set) {
    if (std::find(cols.begin(), cols.end(), name) == cols.end()) cols.push_back(name);
  }
  return cols;
}

Dataset complete_cases(const Dataset& ds, const std::vector<std::string>& columns,
                       std::size_t* dropped) {
  std::vector<bool> keep(ds.n(), true);
  for (const auto& name : columns) {
    const Column* c = ds.find(name);
    if (!c) continue;
    for (std::size_t i = 0; i < ds.n(); ++i) {
      if (c->missing(i)) keep[i] = false;
    }
  }
  std::size_t kept = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
  if (dropped) *dropped = ds.n() - kept;

  std::vector<Column> out;
  out.reserve(ds.columns().size());
  for (const auto& c : ds.columns()) {
    Column nc;
    nc.spec = c.spec;
    nc.levels = c.levels;
    nc.values.reserve(kept);
    for (std::size_t i = 0; i < ds.n(); ++i) {
      if (keep[i]) nc.values.push_back(c.values[i]);
    }
    out.push_back(std::move(nc));
  }
  return Dataset(std::move(out), kept);
}

Dataset dichotomize_treatment(const Dataset& ds, const std::string& dose_column,
                              ValidationReport* report) {
  const Column& dose = ds.col(dose_column);
  if (dose.spec.kind == Kind::categorical) {
    throw DataError("dose column '" + dose_column + "' must be numeric");
  }
  if (ds.first_with_role(Role::treatment)) {
    throw DataError("dataset already has a treatment column");
  }

  Column treated;
  treated.spec = {"treated", Role::treatment, Timing::baseline, Kind::binary};
  treated.values.reserve(ds.n());
  std::size_t n_treated = 0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    double d = dose.values[i];
    if (std::isnan(d)) {
      treated.values.push_back(kNaN);
      continue;
    }
    if (d < 0.0) {
      throw DataError("negative dose " + std::to_string(d) + " in column '" + dose_column +
                      "', row " + std::to_string(i + 1));
    }
    treated.values.push_back(d > 0.0 ? 1.0 : 0.0);
    if (d > 0.0) ++n_treated;
  }
  if (n_treated == 0 && report) {
    report->warn("NO_TREATED", dose_column, "no treated subjects: every dose is zero");
  }

  std::vector<Column> cols = ds.columns();
  Dataset out(std::move(cols), ds.n());
  out.add_column(std::move(treated));
  return out;
}

Dataset recode_categories(const Dataset& ds, const std::string& column,
                          const std::map<std::string, std::string>& mapping) {
  const Column& old = ds.col(column);
  if (old.spec.kind != Kind::categorical) {
    throw DataError("recode target '" + column + "' is not categorical");
  }
  for (const auto& lvl : old.levels) {
    if (!mapping.count(lvl)) {
      throw DataError("recode mapping for '" + column + "' misses level '" + lvl + "'");
    }
  }

  // New levels in the order the old levels map onto them.
  Column nc;
  nc.spec = old.spec;
  std::map<std::string, std::size_t> new_index;
  std::vector<std::size_t> old_to_new(old.levels.size());
  for (std::size_t l = 0; l < old.levels.size(); ++l) {
    const std::string& target = mapping.at(old.levels[l]);
    auto it = new_index.find(target);
    if (it == new_index.end()) {
      it = new_index.emplace(target, nc.levels.size()).first;
      nc.levels.push_back(target);
    }
    old_to_new[l] = it->second;
  }
  nc.values.reserve(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (old.missing(i)) {
      nc.values.push_back(kNaN);
    } else {
      nc.values.push_back(static_cast<double>(old_to_new[static_cast<std::size_t>(old.values[i])]));
    }
  }

  std::vector<Column> cols;
  for (const auto& c : ds.columns()) {
    cols.push_back(c.spec.name == column ? nc : c);
  }
  return Dataset(std::move(cols), ds.n());
}

Design build_design(const Dataset& ds, const std::vector<std::string>& columns) {
  std::vector<std::pair<const Column*, int>> parts;  // column, level (-1 = numeric)
  std::vector<std::string> names;
  for (const auto& name : columns) {
    const Column& c = ds.col(name);
    if (c.spec.kind == Kind::categorical) {
      // Reference level = first appearance; L-1 indicators.
      for (std::size_t l = 1; l < c.levels.size(); ++l) {
        parts.emplace_back(&c, static_cast<int>(l));
        names.push_back(name + "=" + c.levels[l]);
      }
    } else {
      parts.emplace_back(&c, -1);
      names.push_back(name);
    }
  }
  Eigen::MatrixXd X(static_cast<Eigen::Index>(ds.n()), static_cast<Eigen::Index>(parts.size()));
  for (std::size_t j = 0; j < parts.size(); ++j) {
    const auto& [c, level] = parts[j];
    for (std::size_t i = 0; i < ds.n(); ++i) {
      double v = c->values[i];
      if (std::isnan(v)) {
        throw DataError("missing value in design column '" + c->spec.name + "', row " +
                        std::to_string(i + 1) + "; run complete-case filtering first");
      }
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          level < 0 ? v : (static_cast<int>(v) == level ? 1.0 : 0.0);
    }
  }
  return {std::move(X), std::move(names)};
}

}  // namespace tl
