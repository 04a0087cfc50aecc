#include "tl/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace tl {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

const std::string* IniSection::get(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

const IniSection* IniFile::find(const std::string& name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

IniFile IniFile::parse_string(const std::string& text, const std::string& origin) {
  IniFile ini;
  IniSection* current = nullptr;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  std::set<std::string> seen_sections;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, line_no, "expected closing ']'");
      std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) fail(origin, line_no, "empty section name");
      if (!seen_sections.insert(name).second) {
        fail(origin, line_no, "duplicate section [" + name + "]");
      }
      ini.sections.push_back({name, {}, line_no});
      current = &ini.sections.back();
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) fail(origin, line_no, "expected key = value");
    if (!current) fail(origin, line_no, "key outside of any [section]");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(origin, line_no, "empty key");
    if (current->get(key)) {
      fail(origin, line_no, "duplicate key '" + key + "' in [" + current->name + "]");
    }
    current->entries.emplace_back(key, value);
  }
  return ini;
}

IniFile IniFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<LearnerSpec> parse_library(const std::string& s) {
  std::vector<LearnerSpec> lib;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == '\t') {
      if (!cur.empty()) lib.push_back(LearnerSpec::parse(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) lib.push_back(LearnerSpec::parse(cur));
  return lib;
}

namespace {

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

long to_long(const std::string& v, const std::string& key) {
  double d = to_double(v, key);
  if (d != std::floor(d)) throw ConfigError("key '" + key + "': expected an integer");
  return static_cast<long>(d);
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

void check_keys(const IniSection& s, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : s.entries) {
    if (!allowed.count(k)) {
      throw ConfigError("[" + s.name + "]: unknown key '" + k + "'");
    }
  }
}

ColumnSpec parse_column_spec(const std::string& name, const std::string& value) {
  ColumnSpec spec;
  spec.name = name;
  bool have_role = false, have_kind = false, have_timing = false;
  for (const auto& token : split_list(value)) {
    bool matched = false;
    for (const char* r : {"outcome", "treatment", "covariate", "dose", "id", "ignore"}) {
      if (token == r) {
        if (have_role) throw ConfigError("column " + name + ": two roles given");
        spec.role = role_from_string(token);
        have_role = matched = true;
      }
    }
    if (matched) continue;
    for (const char* k : {"binary", "continuous", "categorical"}) {
      if (token == k) {
        if (have_kind) throw ConfigError("column " + name + ": two kinds given");
        spec.kind = kind_from_string(token);
        have_kind = matched = true;
      }
    }
    if (matched) continue;
    for (const char* t : {"baseline", "post_treatment", "post_outcome"}) {
      if (token == t) {
        if (have_timing) throw ConfigError("column " + name + ": two timings given");
        spec.timing = timing_from_string(token);
        have_timing = matched = true;
      }
    }
    if (!matched) {
      throw ConfigError("column " + name + ": unknown token '" + token +
                        "' (expected a role, kind, or timing)");
    }
  }
  if (!have_role) throw ConfigError("column " + name + ": a role is required");
  if (!have_kind) {
    // Outcome and treatment are binary by definition here; everything else
    // defaults to continuous.
    spec.kind = (spec.role == Role::outcome || spec.role == Role::treatment)
                    ? Kind::binary
                    : Kind::continuous;
  }
  return spec;
}

std::vector<LearnerSpec> default_q_library() {
  // Outcome roster: linear regression, lasso, boosted stumps (the flexible
  // nonlinear slot), mirroring the default analysis setup.
  return {LearnerSpec::make(LearnerKind::linear),
          LearnerSpec::make(LearnerKind::lasso_logistic),
          LearnerSpec::make(LearnerKind::boosted_stumps)};
}

std::vector<LearnerSpec> default_g_library() {
  // Propensity roster: logistic regression, boosted stumps, smooth additive
  // logistic (spline basis).
  return {LearnerSpec::make(LearnerKind::logistic),
          LearnerSpec::make(LearnerKind::boosted_stumps),
          LearnerSpec::make(LearnerKind::spline_logistic)};
}

EstimatorConfig parse_estimator(const IniSection& s) {
  check_keys(s, {"kind", "q_library", "g_library", "q_interactions", "v", "g_bound",
                 "oracle_value"});
  EstimatorConfig cfg;
  cfg.name = s.name.substr(std::string("estimator.").size());
  if (cfg.name.empty()) throw ConfigError("estimator section needs a name: [estimator.<name>]");
  if (const auto* v = s.get("kind")) cfg.kind = estimator_kind_from_string(*v);
  if (const auto* v = s.get("q_library")) cfg.q_library = parse_library(*v);
  if (const auto* v = s.get("g_library")) cfg.g_library = parse_library(*v);
  if (const auto* v = s.get("q_interactions")) cfg.q_interactions = split_list(*v);
  if (const auto* v = s.get("v")) cfg.V = static_cast<int>(to_long(*v, "v"));
  if (const auto* v = s.get("g_bound")) cfg.g_bound = to_double(*v, "g_bound");
  if (const auto* v = s.get("oracle_value")) cfg.oracle_value = to_double(*v, "oracle_value");
  return cfg;
}

DgpSpec parse_dgp(const IniSection& s) {
  const auto* cov_list = s.get("covariates");
  if (!cov_list) throw ConfigError("[dgp]: 'covariates' key is required");
  std::vector<std::string> names = split_list(*cov_list);

  std::set<std::string> allowed = {"covariates", "treatment_model", "outcome_model", "seed"};
  for (const auto& n : names) allowed.insert(n);
  check_keys(s, allowed);

  DgpSpec dgp;
  for (const auto& n : names) {
    const auto* v = s.get(n);
    if (!v) throw ConfigError("[dgp]: covariate '" + n + "' has no distribution");
    dgp.covariates.push_back(CovariateGen::parse(n, *v));
  }
  const auto* tm = s.get("treatment_model");
  const auto* om = s.get("outcome_model");
  if (!tm || !om) throw ConfigError("[dgp]: treatment_model and outcome_model are required");
  dgp.treatment_model = LinearLogistic::parse(*tm);
  dgp.outcome_model = LinearLogistic::parse(*om);
  if (const auto* v = s.get("seed")) dgp.seed = static_cast<std::uint64_t>(to_long(*v, "seed"));
  dgp.check();
  return dgp;
}

}  // namespace

RunConfig RunConfig::parse(const IniFile& ini) {
  RunConfig cfg;
  cfg.estimation.q_library = default_q_library();
  cfg.estimation.g_library = default_g_library();

  static const std::set<std::string> known_plain = {"run",         "columns",    "adjustment",
                                                    "estimation",  "diagnostics", "sensitivity",
                                                    "dgp",         "simulation"};
  for (const auto& s : ini.sections) {
    bool known = known_plain.count(s.name) || s.name.rfind("recode.", 0) == 0 ||
                 s.name.rfind("estimator.", 0) == 0;
    if (!known) throw ConfigError("unknown config section [" + s.name + "]");
  }

  if (const auto* s = ini.find("run")) {
    check_keys(*s, {"question", "data", "output", "seed", "threads"});
    if (const auto* v = s->get("question")) cfg.question = *v;
    if (const auto* v = s->get("data")) cfg.data_path = *v;
    if (const auto* v = s->get("output")) cfg.output_dir = *v;
    if (const auto* v = s->get("seed")) cfg.seed = static_cast<std::uint64_t>(to_long(*v, "seed"));
    if (const auto* v = s->get("threads")) {
      cfg.threads = static_cast<int>(to_long(*v, "threads"));
      if (cfg.threads < 1) throw ConfigError("threads must be at least 1");
    }
  }

  if (const auto* s = ini.find("columns")) {
    for (const auto& [name, value] : s->entries) {
      cfg.columns.push_back(parse_column_spec(name, value));
    }
  }

  if (const auto* s = ini.find("adjustment")) {
    check_keys(*s, {"columns", "g_columns"});
    if (const auto* v = s->get("columns")) cfg.adjustment = split_list(*v);
    if (const auto* v = s->get("g_columns")) cfg.g_adjustment = split_list(*v);
  }

  for (const auto& s : ini.sections) {
    if (s.name.rfind("recode.", 0) != 0) continue;
    std::string column = s.name.substr(std::string("recode.").size());
    if (column.empty()) throw ConfigError("recode section needs a column: [recode.<column>]");
    std::map<std::string, std::string> mapping;
    for (const auto& [old_level, new_level] : s.entries) {
      mapping[old_level] = new_level;
    }
    cfg.recodes.emplace_back(column, std::move(mapping));
  }

  if (const auto* s = ini.find("estimation")) {
    check_keys(*s, {"q_library", "g_library", "v", "loss", "g_bound", "q_interactions",
                    "stratify_folds", "baseline_formula"});
    if (const auto* v = s->get("q_library")) cfg.estimation.q_library = parse_library(*v);
    if (const auto* v = s->get("g_library")) cfg.estimation.g_library = parse_library(*v);
    if (const auto* v = s->get("v")) {
      cfg.estimation.V = static_cast<int>(to_long(*v, "v"));
      if (cfg.estimation.V < 2) throw ConfigError("v must be at least 2");
    }
    if (const auto* v = s->get("loss")) cfg.estimation.loss = loss_from_string(*v);
    if (const auto* v = s->get("g_bound")) {
      cfg.estimation.g_bound = to_double(*v, "g_bound");
      if (*cfg.estimation.g_bound < 0.0 || *cfg.estimation.g_bound >= 0.5) {
        throw ConfigError("g_bound must lie in [0, 0.5)");
      }
    }
    if (const auto* v = s->get("q_interactions")) cfg.estimation.q_interactions = split_list(*v);
    if (const auto* v = s->get("stratify_folds")) {
      cfg.estimation.stratify_folds = to_bool(*v, "stratify_folds");
    }
    if (const auto* v = s->get("baseline_formula")) {
      cfg.estimation.baseline_formula = split_list(*v);
    }
  }

  if (const auto* s = ini.find("diagnostics")) {
    check_keys(*s, {"stratifiers", "dose_bins"});
    if (const auto* v = s->get("stratifiers")) cfg.diagnostics.stratifiers = split_list(*v);
    if (const auto* v = s->get("dose_bins")) {
      std::vector<double> edges;
      for (const auto& item : split_list(*v)) edges.push_back(to_double(item, "dose_bins"));
      if (edges.empty() || !std::is_sorted(edges.begin(), edges.end())) {
        throw ConfigError("dose_bins must be ascending");
      }
      cfg.diagnostics.dose_bins = std::move(edges);
    }
  }

  if (const auto* s = ini.find("sensitivity")) {
    check_keys(*s, {"grid_min", "grid_max", "grid_points"});
    const auto* lo = s->get("grid_min");
    const auto* hi = s->get("grid_max");
    if ((lo == nullptr) != (hi == nullptr)) {
      throw ConfigError("[sensitivity]: grid_min and grid_max must be given together");
    }
    if (lo && hi) {
      cfg.sensitivity.auto_grid = false;
      cfg.sensitivity.grid_min = to_double(*lo, "grid_min");
      cfg.sensitivity.grid_max = to_double(*hi, "grid_max");
      if (cfg.sensitivity.grid_min > cfg.sensitivity.grid_max) {
        throw ConfigError("[sensitivity]: grid_min must not exceed grid_max");
      }
    }
    if (const auto* v = s->get("grid_points")) {
      cfg.sensitivity.grid_points = static_cast<int>(to_long(*v, "grid_points"));
      if (cfg.sensitivity.grid_points < 1) throw ConfigError("grid_points must be at least 1");
    }
  }

  if (const auto* s = ini.find("dgp")) cfg.dgp = parse_dgp(*s);

  if (const auto* s = ini.find("simulation")) {
    check_keys(*s, {"n", "reps", "mc_size", "oracle_seed"});
    SimulationConfig sim;
    if (const auto* v = s->get("n")) sim.n = static_cast<std::size_t>(to_long(*v, "n"));
    if (const auto* v = s->get("reps")) sim.reps = static_cast<int>(to_long(*v, "reps"));
    if (const auto* v = s->get("mc_size")) {
      sim.mc_size = static_cast<std::size_t>(to_long(*v, "mc_size"));
    }
    if (const auto* v = s->get("oracle_seed")) {
      sim.oracle_seed = static_cast<std::uint64_t>(to_long(*v, "oracle_seed"));
    }
    cfg.simulation = sim;
  }

  for (const auto& s : ini.sections) {
    if (s.name.rfind("estimator.", 0) == 0) cfg.estimators.push_back(parse_estimator(s));
  }

  return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
  return parse(IniFile::parse_file(path));
}

}  // namespace tl
