#include "tl/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "tl/config.hpp"
#include "tl/diagnostics.hpp"
#include "tl/math.hpp"
#include "tl/report.hpp"
#include "tl/sensitivity.hpp"
#include "tl/sim.hpp"
#include "tl/tmle.hpp"

namespace tl {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kValidationFail = 2;
constexpr int kIdentificationConcern = 3;
constexpr int kEstimationFail = 4;

struct Context {
  RunConfig cfg;
  std::string command;
  std::string config_path;
  fs::path out;
  json report;

  Dataset data;       // loaded, recoded, dichotomized
  Dataset analysis;   // complete cases
  ValidationReport vr;
  bool data_ready = false;
};

RunConfig load_config(const CommandOptions& opts) {
  RunConfig cfg = RunConfig::parse_file(opts.config_path);
  if (opts.out_dir) cfg.output_dir = *opts.out_dir;
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.threads) cfg.threads = *opts.threads;
  return cfg;
}

json findings_json(const std::vector<Finding>& fs_list) {
  json arr = json::array();
  for (const auto& f : fs_list) {
    arr.push_back({{"code", f.code}, {"column", f.column}, {"message", f.message}});
  }
  return arr;
}

json column_roster(const RunConfig& cfg) {
  json arr = json::array();
  for (const auto& c : cfg.columns) {
    arr.push_back({{"name", c.name},
                   {"role", to_string(c.role)},
                   {"timing", to_string(c.timing)},
                   {"kind", to_string(c.kind)}});
  }
  return arr;
}

json library_json(const std::vector<LearnerSpec>& lib) {
  json arr = json::array();
  for (const auto& l : lib) arr.push_back(l.name());
  return arr;
}

json sl_json(const SuperLearnerFit& sl) {
  json j;
  j["library"] = library_json(sl.library);
  json weights = json::array(), risks = json::array(), dropped = json::array();
  for (Eigen::Index l = 0; l < sl.weights.size(); ++l) {
    weights.push_back(sl.weights(l));
    risks.push_back(sl.cv_risks(l));  // NaN -> null for dropped learners
    dropped.push_back(static_cast<bool>(sl.dropped[static_cast<std::size_t>(l)]));
  }
  j["weights"] = weights;
  j["cv_risks"] = risks;
  j["dropped"] = dropped;
  j["ensemble_cv_risk"] = sl.ensemble_cv_risk;
  j["loss"] = to_string(sl.loss);
  j["v"] = sl.folds.V;
  if (sl.folds.stratified_on) j["folds_stratified_on"] = *sl.folds.stratified_on;
  j["warnings"] = sl.warnings;
  return j;
}

void init_report(Context& ctx) {
  json& r = ctx.report;
  r["schema_version"] = kReportSchemaVersion;
  r["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  r["seed"] = ctx.cfg.seed;
  // Roadmap labels run 0-5; section headings elsewhere may count 1-6.
  r["step_numbering"] = "steps labeled 0-5";
  r["steps"]["step0_question"] = {
      {"text", ctx.cfg.question.empty() ? "(question not specified)" : ctx.cfg.question}};
  for (const char* key : {"step1_statistical_model", "step2_causal_estimand",
                          "step3_identification", "step4_estimation",
                          "step5_interpretation"}) {
    r["steps"][key] = {{"status", "not_run"}};
  }
}

void write_report(const Context& ctx) {
  ensure_directory(ctx.out.string());
  write_text_atomic((ctx.out / "report.json").string(), ctx.report.dump(2) + "\n");
  write_meta_file((ctx.out / "report_meta.json").string(), ctx.command, ctx.config_path);
}

// Every column the estimation stage will read: the outcome adjustment set
// plus any separate propensity adjustment set.
std::vector<std::string> all_adjustment_columns(const RunConfig& cfg) {
  std::vector<std::string> cols = cfg.adjustment;
  for (const auto& name : cfg.g_adjustment) {
    if (std::find(cols.begin(), cols.end(), name) == cols.end()) cols.push_back(name);
  }
  return cols;
}

// Load -> recode -> dichotomize -> validate -> complete cases. Hard load
// failures are folded into the validation findings so a report can still be
// written.
void prepare_data(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  if (!cfg.data_path) {
    throw ConfigError("[run] data is required for this command");
  }
  if (cfg.columns.empty()) {
    throw ConfigError("[columns] section is required for this command");
  }

  json& step1 = ctx.report["steps"]["step1_statistical_model"];
  step1["model"] = "nonparametric: all distributions of O = (Y, A, W) consistent with "
                   "the study inclusion criteria";
  step1["columns"] = column_roster(cfg);

  try {
    Dataset ds = load_dataset(*cfg.data_path, cfg.columns);
    for (const auto& [column, mapping] : cfg.recodes) {
      ds = recode_categories(ds, column, mapping);
    }
    if (!ds.first_with_role(Role::treatment)) {
      if (const Column* dose = ds.first_with_role(Role::dose)) {
        ds = dichotomize_treatment(ds, dose->spec.name, &ctx.vr);
      }
    }
    ctx.data = std::move(ds);
    ctx.data_ready = true;
  } catch (const DataError& e) {
    ctx.vr.error("LOAD_ERROR", "", e.what());
  }

  if (ctx.data_ready) {
    std::vector<std::string> adj = all_adjustment_columns(cfg);
    ValidationReport vr = validate(ctx.data, adj);
    // Keep any dichotomization warnings gathered above.
    for (const auto& f : vr.errors) ctx.vr.errors.push_back(f);
    for (const auto& f : vr.warnings) ctx.vr.warnings.push_back(f);
    ctx.vr.rows_dropped = vr.rows_dropped;
    step1["n_loaded"] = ctx.data.n();
    if (ctx.vr.ok()) {
      std::size_t dropped = 0;
      ctx.analysis = complete_cases(ctx.data, analysis_columns(ctx.data, adj), &dropped);
      step1["rows_dropped"] = dropped;
      step1["n_analysis"] = ctx.analysis.n();
    }
  }

  step1["validation"] = {{"errors", findings_json(ctx.vr.errors)},
                         {"warnings", findings_json(ctx.vr.warnings)},
                         {"rows_dropped", ctx.vr.rows_dropped}};
  step1["status"] = ctx.vr.ok() ? "ok" : "errors";

  json& step2 = ctx.report["steps"]["step2_causal_estimand"];
  step2["parameter"] = "marginal risk difference E[Y(1)] - E[Y(0)]";
  step2["also_reported"] = {"risk ratio", "odds ratio"};
  for (const auto& c : cfg.columns) {
    if (c.role == Role::treatment) step2["treatment"] = "binary column '" + c.name + "'";
  }
  if (!step2.contains("treatment")) {
    for (const auto& c : cfg.columns) {
      if (c.role == Role::dose) {
        step2["treatment"] = "any-vs-none dichotomization of dose column '" + c.name + "'";
      }
    }
  }
  step2["adjustment_set"] = cfg.adjustment;
  step2["status"] = "ok";
}

// Positivity tables and the crude dose-group table; returns true when some
// stratum has an empty arm.
bool run_identification(Context& ctx) {
  json& step3 = ctx.report["steps"]["step3_identification"];
  json tables = json::array();
  bool concern = false;

  for (const auto& stratifier : ctx.cfg.diagnostics.stratifiers) {
    PositivityTable t = positivity_table(ctx.analysis, stratifier);
    json cells = json::array();
    for (const auto& c : t.cells) {
      cells.push_back(
          {{"level", c.level}, {"n_control", c.n_control}, {"n_treated", c.n_treated}});
    }
    tables.push_back({{"stratifier", stratifier},
                      {"cells", cells},
                      {"zero_cells", t.zero_cells},
                      {"csv", "positivity_" + stratifier + ".csv"}});
    write_positivity_csv((ctx.out / ("positivity_" + stratifier + ".csv")).string(), t);
    if (!t.zero_cells.empty()) concern = true;
  }
  step3["positivity_tables"] = tables;
  if (ctx.cfg.diagnostics.stratifiers.empty()) {
    step3["note"] = "no stratifiers checked";
  }

  if (const Column* dose = ctx.analysis.first_with_role(Role::dose)) {
    std::vector<double> edges =
        ctx.cfg.diagnostics.dose_bins.value_or(std::vector<double>{0, 10, 20, 30, 40, 50});
    auto bins = crude_dose_table(ctx.analysis, dose->spec.name, edges);
    json dose_rows = json::array();
    for (const auto& b : bins) {
      json row = {{"bin", b.label}, {"n", b.n}, {"events", b.events}};
      if (b.proportion) row["proportion"] = *b.proportion;
      dose_rows.push_back(row);
    }
    step3["crude_dose_table"] = dose_rows;
    write_dose_csv((ctx.out / "crude_dose.csv").string(), bins);
  }

  if (concern) {
    step3["status"] = "concern";
    step3["remediation"] =
        "some strata have an empty treatment arm; consider re-defining (recoding) the "
        "categories via a [recode.<column>] section if coarser groups are clinically justified";
  } else {
    step3["status"] = "ok";
  }
  return concern;
}

std::vector<double> sensitivity_grid(const SensitivityConfig& sc, double psi, double se) {
  if (sc.auto_grid) return default_sensitivity_grid(psi, se);
  std::vector<double> grid;
  if (sc.grid_points == 1 || sc.grid_min == sc.grid_max) {
    grid.push_back(sc.grid_min);
    return grid;
  }
  for (int i = 0; i < sc.grid_points; ++i) {
    grid.push_back(sc.grid_min + (sc.grid_max - sc.grid_min) * static_cast<double>(i) /
                                     (sc.grid_points - 1));
  }
  return grid;
}

json sensitivity_json(const SensitivityCurve& curve) {
  json j;
  json thresholds;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) thresholds[key] = *v;
  };
  put("significance_pos", curve.threshold_significance_pos);
  put("sign_reversal_pos", curve.threshold_sign_reversal_pos);
  put("significance_neg", curve.threshold_significance_neg);
  put("sign_reversal_neg", curve.threshold_sign_reversal_neg);
  j["thresholds"] = thresholds;
  j["grid_size"] = curve.rows.size();
  j["curve_csv"] = "sensitivity_curve.csv";
  return j;
}

int finish(Context& ctx, int code) {
  write_report(ctx);
  return code;
}

template <typename Body>
int guarded(const char* command, Body body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return kUsage;
  } catch (const EstimationError& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return kEstimationFail;
  } catch (const DataError& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return kValidationFail;
  } catch (const std::exception& e) {
    std::cerr << command << ": unexpected error: " << e.what() << "\n";
    return kUsage;
  }
}

Context make_context(const CommandOptions& opts, const char* command) {
  Context ctx;
  ctx.cfg = load_config(opts);
  ctx.command = command;
  ctx.config_path = opts.config_path;
  ctx.out = ctx.cfg.output_dir;
  ensure_directory(ctx.out.string());
  init_report(ctx);
  return ctx;
}

}  // namespace

int cmd_validate(const CommandOptions& opts) {
  return guarded("validate", [&] {
    Context ctx = make_context(opts, "validate");
    prepare_data(ctx);
    std::cout << "validation: " << (ctx.vr.ok() ? "ok" : "failed") << " ("
              << ctx.vr.errors.size() << " error(s), " << ctx.vr.warnings.size()
              << " warning(s), " << ctx.vr.rows_dropped << " row(s) dropped)\n";
    return finish(ctx, ctx.vr.ok() ? kOk : kValidationFail);
  });
}

int cmd_diagnose(const CommandOptions& opts) {
  return guarded("diagnose", [&] {
    Context ctx = make_context(opts, "diagnose");
    prepare_data(ctx);
    if (!ctx.vr.ok()) {
      std::cout << "diagnose: validation failed; fix the data first\n";
      return finish(ctx, kValidationFail);
    }
    bool concern = run_identification(ctx);
    if (concern) {
      std::cout << "diagnose: positivity concern; some strata have an empty arm "
                   "(consider re-defining categories via [recode.<column>])\n";
    } else {
      std::cout << "diagnose: ok\n";
    }
    return finish(ctx, concern ? kIdentificationConcern : kOk);
  });
}

int cmd_estimate(const CommandOptions& opts) {
  return guarded("estimate", [&] {
    Context ctx = make_context(opts, "estimate");
    prepare_data(ctx);
    if (!ctx.vr.ok()) {
      std::cout << "estimate: validation failed; nothing estimated\n";
      return finish(ctx, kValidationFail);
    }
    if (run_identification(ctx)) {
      std::cout << "estimate: identification concern; estimation not run\n";
      return finish(ctx, kIdentificationConcern);
    }

    const EstimationConfig& est = ctx.cfg.estimation;
    NuisanceOptions nopt;
    nopt.q_library = est.q_library;
    nopt.g_library = est.g_library;
    nopt.adjustment = ctx.cfg.adjustment;
    nopt.g_adjustment = ctx.cfg.g_adjustment;
    nopt.q_interactions = est.q_interactions;
    nopt.V = est.V;
    nopt.seed = ctx.cfg.seed;
    nopt.stratify_folds = est.stratify_folds;
    nopt.loss = est.loss;
    nopt.g_bound = est.g_bound;

    // Fold construction checks V against n before any fitting.
    if (static_cast<std::size_t>(nopt.V) > ctx.analysis.n()) {
      throw ConfigError("v=" + std::to_string(nopt.V) + " exceeds the analysis sample size n=" +
                        std::to_string(ctx.analysis.n()));
    }

    NuisanceFits nf;
    Fluctuation fl;
    TmleResult result;
    try {
      try {
        nf = fit_nuisances(ctx.analysis, nopt);
      } catch (const Error& e) {
        throw EstimationError(std::string("stage nuisance-fitting: ") + e.what());
      }
      try {
        auto [h1, h0] = clever_covariates(nf.a, nf.g);
        fl = fluctuate(nf.q_obs, h1, h0, nf.y);
      } catch (const Error& e) {
        throw EstimationError(std::string("stage targeting: ") + e.what());
      }
      try {
        result = tmle_estimate(nf, fl);
      } catch (const Error& e) {
        throw EstimationError(std::string("stage inference: ") + e.what());
      }
    } catch (const EstimationError& e) {
      // The report still documents how far the run got.
      json& step4 = ctx.report["steps"]["step4_estimation"];
      step4["status"] = "failed";
      step4["error"] = e.what();
      std::cerr << "estimate: " << e.what() << "\n";
      return finish(ctx, kEstimationFail);
    }

    json& step4 = ctx.report["steps"]["step4_estimation"];
    step4["status"] = "ok";
    json estimates;
    estimates["rd"] = {{"estimate", result.psi_rd},
                       {"se", result.se_rd},
                       {"ci_lower", result.ci_rd_lo},
                       {"ci_upper", result.ci_rd_hi}};
    if (result.psi_rr) {
      estimates["rr"] = {{"estimate", *result.psi_rr},
                         {"se_log", *result.se_log_rr},
                         {"ci_lower", *result.ci_rr_lo},
                         {"ci_upper", *result.ci_rr_hi}};
    }
    if (result.psi_or) {
      estimates["or"] = {{"estimate", *result.psi_or},
                         {"se_log", *result.se_log_or},
                         {"ci_lower", *result.ci_or_lo},
                         {"ci_upper", *result.ci_or_hi}};
    }
    step4["estimates"] = estimates;
    step4["mu1"] = result.mu1;
    step4["mu0"] = result.mu0;
    step4["gcomp_rd"] = result.gcomp_rd;
    step4["gcomp_note"] = "untargeted plug-in shown for comparison; no valid SE";
    step4["ic_mean_rd"] = result.ic_mean_rd;
    step4["fluctuation"] = {{"eps0", result.fluctuation.eps0},
                            {"eps1", result.fluctuation.eps1},
                            {"converged", result.fluctuation.converged}};
    step4["g_bound"] = result.g_bound;
    step4["truncation_count"] = result.truncation_count;
    step4["super_learner"] = {{"q", sl_json(nf.q_fit)},
                              {"g", sl_json(nf.g_fit)},
                              {"meta_learner",
                               "convex weights minimizing held-out loss "
                               "(projected gradient on the simplex)"}};

    OverlapSummary overlap = overlap_summary(clip(nf.g_raw, 0.0, 1.0), nf.a);
    step4["ps_diagnostics"] = {{"c_statistic", overlap.c_stat},
                               {"min_control", overlap.min_control},
                               {"max_control", overlap.max_control},
                               {"min_treated", overlap.min_treated},
                               {"max_treated", overlap.max_treated},
                               {"overlap_csv", "overlap_hist.csv"}};
    write_overlap_csv((ctx.out / "overlap_hist.csv").string(), overlap);

    if (!est.baseline_formula.empty()) {
      const Column* dose = ctx.analysis.first_with_role(Role::dose);
      const Column* treat = ctx.analysis.first_with_role(Role::treatment);
      const Column* term = dose ? dose : treat;
      ParametricBaseline pb =
          parametric_baseline(ctx.analysis, est.baseline_formula, term->spec.name);
      json rows = json::array();
      for (const auto& r : pb.rows) {
        json row = {{"term", r.term},
                    {"estimate", r.estimate},
                    {"se", r.se},
                    {"odds_ratio", r.odds_ratio}};
        if (r.or_lo) row["or_ci_lower"] = *r.or_lo;
        if (r.or_hi) row["or_ci_upper"] = *r.or_hi;
        rows.push_back(row);
      }
      step4["parametric_baseline"] = {{"model", "main-terms logistic regression"},
                                      {"rows", rows},
                                      {"warnings", findings_json(pb.warnings)},
                                      {"separation", pb.separation}};
    }
    step4["warnings"] = nf.warnings;

    SensitivityCurve curve =
        causal_gap_curve(result.psi_rd, result.se_rd, result.ci_rd_lo, result.ci_rd_hi,
                         sensitivity_grid(ctx.cfg.sensitivity, result.psi_rd, result.se_rd));
    write_sensitivity_csv((ctx.out / "sensitivity_curve.csv").string(), curve);
    json& step5 = ctx.report["steps"]["step5_interpretation"];
    step5 = sensitivity_json(curve);
    step5["status"] = "ok";
    step5["rd"] = {{"estimate", result.psi_rd},
                   {"se", result.se_rd},
                   {"ci_lower", result.ci_rd_lo},
                   {"ci_upper", result.ci_rd_hi}};

    std::cout << "estimate: rd=" << format_double(result.psi_rd)
              << " se=" << format_double(result.se_rd) << " ci=["
              << format_double(result.ci_rd_lo) << "," << format_double(result.ci_rd_hi)
              << "] gcomp=" << format_double(result.gcomp_rd)
              << " c_stat=" << format_double(overlap.c_stat) << "\n";
    return finish(ctx, kOk);
  });
}

int cmd_sensitivity(const CommandOptions& opts) {
  return guarded("sensitivity", [&] {
    Context ctx = make_context(opts, "sensitivity");
    fs::path report_path =
        opts.report_path ? fs::path(*opts.report_path) : ctx.out / "report.json";
    std::ifstream in(report_path);
    if (!in) {
      throw ConfigError("no report at " + report_path.string() + "; run estimate first");
    }
    json report = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (report.is_discarded()) {
      throw ConfigError("report at " + report_path.string() + " is not valid JSON");
    }
    const auto& steps = report.contains("steps") ? report["steps"] : json::object();
    if (!steps.contains("step4_estimation") ||
        steps["step4_estimation"].value("status", "not_run") != "ok") {
      throw ConfigError("report has no estimation results; run estimate first");
    }
    const auto& rd = steps["step4_estimation"]["estimates"]["rd"];
    double psi = rd["estimate"].get<double>();
    double se = rd["se"].get<double>();
    double lo = rd["ci_lower"].get<double>();
    double hi = rd["ci_upper"].get<double>();

    SensitivityCurve curve = causal_gap_curve(
        psi, se, lo, hi, sensitivity_grid(ctx.cfg.sensitivity, psi, se));
    write_sensitivity_csv((ctx.out / "sensitivity_curve.csv").string(), curve);

    report["steps"]["step5_interpretation"] = sensitivity_json(curve);
    report["steps"]["step5_interpretation"]["status"] = "ok";
    report["steps"]["step5_interpretation"]["rd"] = rd;
    write_text_atomic(report_path.string(), report.dump(2) + "\n");
    write_meta_file((ctx.out / "report_meta.json").string(), ctx.command, ctx.config_path);

    std::cout << "sensitivity: thresholds";
    if (curve.threshold_significance_pos) {
      std::cout << " significance=" << format_double(*curve.threshold_significance_pos);
    }
    if (curve.threshold_sign_reversal_pos) {
      std::cout << " sign_reversal=" << format_double(*curve.threshold_sign_reversal_pos);
    }
    std::cout << "\n";
    return kOk;
  });
}

int cmd_simulate(const CommandOptions& opts) {
  return guarded("simulate", [&] {
    Context ctx = make_context(opts, "simulate");
    if (!ctx.cfg.dgp) {
      throw ConfigError("[dgp] section is required for simulate");
    }
    SimulationConfig sim = ctx.cfg.simulation.value_or(SimulationConfig{});
    std::vector<EstimatorConfig> estimators = ctx.cfg.estimators;
    if (estimators.empty()) {
      EstimatorConfig def;
      def.name = "tmle";
      estimators.push_back(def);
    }

    DgpSpec dgp = *ctx.cfg.dgp;
    ReplicateOptions ropt;
    ropt.mc_size = sim.mc_size;
    ropt.oracle_seed = sim.oracle_seed;
    ropt.threads = ctx.cfg.threads;
    ReplicationSummary summary = replicate_study(dgp, sim.n, sim.reps, estimators, ropt);

    json j;
    j["n"] = summary.n;
    j["reps"] = summary.reps;
    j["true_rd"] = summary.true_rd;
    j["oracle_mc_se"] = summary.oracle_mc_se;
    j["replicate_seed_rule"] = "replicate i uses seed dgp_seed + i (0-based)";
    json ests = json::array();
    for (const auto& e : summary.estimators) {
      json row = {{"name", e.name},
                  {"reps", e.reps},
                  {"mean_estimate", e.mean_estimate},
                  {"mean_bias", e.mean_bias}};
      if (e.sd_estimate) row["sd_estimate"] = *e.sd_estimate;
      if (e.mean_se) row["mean_se"] = *e.mean_se;
      if (e.coverage) row["coverage"] = *e.coverage;
      if (e.mean_ci_width) row["mean_ci_width"] = *e.mean_ci_width;
      ests.push_back(row);
    }
    j["estimators"] = ests;
    write_text_atomic((ctx.out / "simulation_summary.json").string(), j.dump(2) + "\n");
    write_replication_csv((ctx.out / "simulation_summary.csv").string(), summary);
    write_meta_file((ctx.out / "report_meta.json").string(), ctx.command, ctx.config_path);

    std::cout << "simulate: true_rd=" << format_double(summary.true_rd) << "\n";
    for (const auto& e : summary.estimators) {
      std::cout << "  " << e.name << ": mean_bias=" << format_double(e.mean_bias);
      if (e.coverage) std::cout << " coverage=" << format_double(*e.coverage);
      std::cout << "\n";
    }
    return kOk;
  });
}

}  // namespace tl
