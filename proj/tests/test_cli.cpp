#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "test_helpers.hpp"
#include "tl/commands.hpp"
#include "tl/config.hpp"
#include "tl/math.hpp"
#include "tl/sim.hpp"

using namespace tl;
using nlohmann::json;

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  return json::parse(in);
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string e8_csv() {
  std::string csv = "W,A,Y\n";
  Dataset ds = e8_dataset();
  for (std::size_t i = 0; i < ds.n(); ++i) {
    csv += std::to_string(static_cast<int>(ds.col("W").values[i])) + "," +
           std::to_string(static_cast<int>(ds.col("A").values[i])) + "," +
           std::to_string(static_cast<int>(ds.col("Y").values[i])) + "\n";
  }
  return csv;
}

std::string e8_config(const tlt::TempDir& dir) {
  std::string cfg =
      "[run]\n"
      "question = Does any exposure raise the outcome risk?\n"
      "data = " + dir.file("e8.csv") + "\n"
      "output = " + dir.file("out") + "\n"
      "seed = 1\n"
      "[columns]\n"
      "W = covariate, binary\n"
      "A = treatment, binary\n"
      "Y = outcome, binary\n"
      "[adjustment]\n"
      "columns = W\n"
      "[estimation]\n"
      "q_library = logistic\n"
      "g_library = logistic\n"
      "v = 2\n"
      "g_bound = 0\n";
  tlt::write_file(dir.file("e8.csv"), e8_csv());
  tlt::write_file(dir.file("run.ini"), cfg);
  return dir.file("run.ini");
}

std::string table1_config(const tlt::TempDir& dir, bool recode) {
  std::string cfg =
      "[run]\n"
      "question = Any ritodrine vs none\n"
      "data = " + dir.file("cohort.csv") + "\n"
      "output = " + dir.file("out") + "\n"
      "[columns]\n"
      "age_group = covariate, categorical\n"
      "dose = dose, continuous\n"
      "edema = outcome, binary\n"
      "[adjustment]\n"
      "columns = age_group\n"
      "[diagnostics]\n"
      "stratifiers = age_group\n";
  if (recode) {
    cfg +=
        "[recode.age_group]\n"
        "16-20 = 16-30\n"
        "21-25 = 16-30\n"
        "26-30 = 16-30\n"
        "31-35 = 31-35\n"
        "36-40 = 36-50\n"
        "41-45 = 36-50\n"
        "46-50 = 36-50\n";
  }
  tlt::write_file(dir.file("cohort.csv"), tlt::table1_csv());
  tlt::write_file(dir.file("run.ini"), cfg);
  return dir.file("run.ini");
}

}  // namespace

TEST_CASE("ini parsing: sections, comments, strictness") {
  IniFile ini = IniFile::parse_string(
      "# comment\n[run]\nseed = 7\n; another\n[columns]\na = outcome\n", "test");
  REQUIRE(ini.sections.size() == 2);
  CHECK(*ini.find("run")->get("seed") == "7");
  CHECK_THROWS_AS(IniFile::parse_string("[run]\nseed = 1\nseed = 2\n", "t"), ConfigError);
  CHECK_THROWS_AS(IniFile::parse_string("key = 1\n", "t"), ConfigError);
  CHECK_THROWS_AS(IniFile::parse_string("[run\n", "t"), ConfigError);
  CHECK_THROWS_AS(IniFile::parse_string("[run]\nnot a pair\n", "t"), ConfigError);
}

TEST_CASE("run config rejects unknown sections and keys") {
  CHECK_THROWS_WITH_AS(RunConfig::parse(IniFile::parse_string("[mystery]\nx = 1\n", "t")),
                       doctest::Contains("mystery"), ConfigError);
  CHECK_THROWS_WITH_AS(RunConfig::parse(IniFile::parse_string("[run]\ncolor = red\n", "t")),
                       doctest::Contains("color"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse(IniFile::parse_string("[estimation]\nv = 1\n", "t")),
                  ConfigError);
  CHECK_THROWS_AS(
      RunConfig::parse(IniFile::parse_string("[columns]\nx = covariate, sideways\n", "t")),
      ConfigError);
}

TEST_CASE("run config parses libraries and defaults") {
  RunConfig cfg = RunConfig::parse(IniFile::parse_string(
      "[estimation]\nq_library = logistic boosted_stumps:rounds=200,lr=0.05\n", "t"));
  REQUIRE(cfg.estimation.q_library.size() == 2);
  CHECK(cfg.estimation.q_library[1].get("rounds", 0) == 200);
  CHECK(cfg.estimation.V == 20);
  CHECK(cfg.seed == 20170704);
  CHECK(cfg.estimation.g_library.size() == 3);  // default roster
  CHECK(cfg.sensitivity.auto_grid);
}

TEST_CASE("cmd_validate: clean run exits 0, timing violation exits 2") {
  tlt::TempDir dir("cli_validate");
  std::string cfg_path = table1_config(dir, false);
  CommandOptions opts;
  opts.config_path = cfg_path;
  CHECK(cmd_validate(opts) == 0);

  // Re-declare the age column as post-outcome: validation must fail.
  std::string broken =
      "[run]\n"
      "data = " + dir.file("cohort.csv") + "\n"
      "output = " + dir.file("out2") + "\n"
      "[columns]\n"
      "age_group = covariate, categorical, post_outcome\n"
      "dose = dose, continuous\n"
      "edema = outcome, binary\n"
      "[adjustment]\n"
      "columns = age_group\n";
  tlt::write_file(dir.file("broken.ini"), broken);
  opts.config_path = dir.file("broken.ini");
  CHECK(cmd_validate(opts) == 2);
  json report = read_json(dir.file("out2") + "/report.json");
  bool saw = false;
  for (const auto& e : report["steps"]["step1_statistical_model"]["validation"]["errors"]) {
    if (e["code"] == "TIMING_VIOLATION") saw = true;
  }
  CHECK(saw);
  CHECK(report["steps"]["step4_estimation"]["status"] == "not_run");
}

TEST_CASE("cmd_validate: unreadable config exits 1") {
  CommandOptions opts;
  opts.config_path = "/nonexistent/run.ini";
  CHECK(cmd_validate(opts) == 1);
  tlt::TempDir dir("cli_badcfg");
  tlt::write_file(dir.file("bad.ini"), "not an ini at all\n");
  opts.config_path = dir.file("bad.ini");
  CHECK(cmd_validate(opts) == 1);
}

TEST_CASE("cmd_diagnose: original age groups are an identification concern") {
  tlt::TempDir dir("cli_diag");
  CommandOptions opts;
  opts.config_path = table1_config(dir, false);
  CHECK(cmd_diagnose(opts) == 3);
  json report = read_json(dir.file("out") + "/report.json");
  const auto& step3 = report["steps"]["step3_identification"];
  CHECK(step3["status"] == "concern");
  auto zeros = step3["positivity_tables"][0]["zero_cells"];
  REQUIRE(zeros.size() == 2);
  CHECK(zeros[0] == "16-20");
  CHECK(zeros[1] == "46-50");
  CHECK(std::filesystem::exists(dir.file("out") + "/positivity_age_group.csv"));
  CHECK(std::filesystem::exists(dir.file("out") + "/crude_dose.csv"));
}

TEST_CASE("cmd_diagnose: re-defined age groups pass") {
  tlt::TempDir dir("cli_diag_rec");
  CommandOptions opts;
  opts.config_path = table1_config(dir, true);
  CHECK(cmd_diagnose(opts) == 0);
  json report = read_json(dir.file("out") + "/report.json");
  CHECK(report["steps"]["step3_identification"]["status"] == "ok");
}

TEST_CASE("cmd_diagnose: no stratifiers leaves a note and exits 0") {
  tlt::TempDir dir("cli_diag_none");
  std::string cfg =
      "[run]\n"
      "data = " + dir.file("cohort.csv") + "\n"
      "output = " + dir.file("out") + "\n"
      "[columns]\n"
      "age_group = covariate, categorical\n"
      "dose = dose, continuous\n"
      "edema = outcome, binary\n";
  tlt::write_file(dir.file("cohort.csv"), tlt::table1_csv());
  tlt::write_file(dir.file("run.ini"), cfg);
  CommandOptions opts;
  opts.config_path = dir.file("run.ini");
  CHECK(cmd_diagnose(opts) == 0);
  json report = read_json(dir.file("out") + "/report.json");
  CHECK(report["steps"]["step3_identification"]["note"] == "no stratifiers checked");
}

TEST_CASE("cmd_estimate: E8 run reports a risk difference of one half") {
  tlt::TempDir dir("cli_e8");
  CommandOptions opts;
  opts.config_path = e8_config(dir);
  CHECK(cmd_estimate(opts) == 0);
  json report = read_json(dir.file("out") + "/report.json");
  const auto& step4 = report["steps"]["step4_estimation"];
  CHECK(step4["status"] == "ok");
  double rd = step4["estimates"]["rd"]["estimate"].get<double>();
  CHECK(std::abs(rd - 0.5) < 1e-10);
  double gcomp = step4["gcomp_rd"].get<double>();
  CHECK(std::abs(gcomp - 0.5) < 1e-10);
  CHECK(std::abs(step4["ic_mean_rd"].get<double>()) < 1e-8);
  CHECK(report["steps"]["step5_interpretation"]["status"] == "ok");
  CHECK(std::filesystem::exists(dir.file("out") + "/sensitivity_curve.csv"));
  CHECK(std::filesystem::exists(dir.file("out") + "/overlap_hist.csv"));
}

TEST_CASE("cmd_estimate: byte-identical reports for identical config and seed") {
  tlt::TempDir dir("cli_det");
  std::string cfg_path = e8_config(dir);
  CommandOptions opts;
  opts.config_path = cfg_path;
  opts.out_dir = dir.file("run_a");
  REQUIRE(cmd_estimate(opts) == 0);
  opts.out_dir = dir.file("run_b");
  REQUIRE(cmd_estimate(opts) == 0);
  CHECK(read_bytes(dir.file("run_a") + "/report.json") ==
        read_bytes(dir.file("run_b") + "/report.json"));
  CHECK(read_bytes(dir.file("run_a") + "/sensitivity_curve.csv") ==
        read_bytes(dir.file("run_b") + "/sensitivity_curve.csv"));
}

TEST_CASE("cmd_estimate: V larger than n exits 1 at fold construction") {
  tlt::TempDir dir("cli_vn");
  std::string cfg =
      "[run]\n"
      "data = " + dir.file("e8.csv") + "\n"
      "output = " + dir.file("out") + "\n"
      "[columns]\n"
      "W = covariate, binary\n"
      "A = treatment, binary\n"
      "Y = outcome, binary\n"
      "[adjustment]\n"
      "columns = W\n"
      "[estimation]\n"
      "v = 20\n"
      "g_bound = 0\n";
  tlt::write_file(dir.file("e8.csv"), e8_csv());
  tlt::write_file(dir.file("run.ini"), cfg);
  CommandOptions opts;
  opts.config_path = dir.file("run.ini");
  CHECK(cmd_estimate(opts) == 1);
}

TEST_CASE("cmd_estimate blocks on identification concerns") {
  tlt::TempDir dir("cli_est_block");
  CommandOptions opts;
  opts.config_path = table1_config(dir, false);  // zero cells present
  CHECK(cmd_estimate(opts) == 3);
  json report = read_json(dir.file("out") + "/report.json");
  CHECK(report["steps"]["step4_estimation"]["status"] == "not_run");
  CHECK(report["steps"]["step5_interpretation"]["status"] == "not_run");
}

TEST_CASE("cmd_estimate: catastrophic positivity failure exits 4 with the stage named") {
  tlt::TempDir dir("cli_allt");
  std::string csv = "W,A,Y\n";
  for (int i = 0; i < 12; ++i) {
    csv += std::to_string(i % 2) + ",1," + std::to_string(i % 3 == 0 ? 1 : 0) + "\n";
  }
  tlt::write_file(dir.file("allt.csv"), csv);
  std::string cfg =
      "[run]\n"
      "data = " + dir.file("allt.csv") + "\n"
      "output = " + dir.file("out") + "\n"
      "[columns]\n"
      "W = covariate, binary\n"
      "A = treatment, binary\n"
      "Y = outcome, binary\n"
      "[adjustment]\n"
      "columns = W\n"
      "[estimation]\n"
      "v = 3\n"
      "g_bound = 0\n";
  tlt::write_file(dir.file("run.ini"), cfg);
  CommandOptions opts;
  opts.config_path = dir.file("run.ini");
  CHECK(cmd_estimate(opts) == 4);
  json report = read_json(dir.file("out") + "/report.json");
  CHECK(report["steps"]["step4_estimation"]["status"] == "failed");
  std::string err = report["steps"]["step4_estimation"]["error"].get<std::string>();
  CHECK(err.find("stage nuisance-fitting") != std::string::npos);
}

TEST_CASE("cmd_validate checks the propensity adjustment set's timing too") {
  tlt::TempDir dir("cli_gcols");
  std::string csv = "W,P,A,Y\n0,0,0,0\n1,1,1,1\n0,1,1,0\n1,0,0,1\n";
  tlt::write_file(dir.file("d.csv"), csv);
  std::string cfg =
      "[run]\n"
      "data = " + dir.file("d.csv") + "\n"
      "output = " + dir.file("out") + "\n"
      "[columns]\n"
      "W = covariate, binary\n"
      "P = covariate, binary, post_outcome\n"
      "A = treatment, binary\n"
      "Y = outcome, binary\n"
      "[adjustment]\n"
      "columns = W\n"
      "g_columns = W, P\n";
  tlt::write_file(dir.file("run.ini"), cfg);
  CommandOptions opts;
  opts.config_path = dir.file("run.ini");
  CHECK(cmd_validate(opts) == 2);
}

TEST_CASE("cmd_sensitivity: loads a prior report and writes thresholds") {
  tlt::TempDir dir("cli_sens");
  std::string report =
      R"({"steps": {"step4_estimation": {"status": "ok", "estimates": {"rd": )"
      R"({"estimate": 0.21, "se": 0.062, "ci_lower": 0.09, "ci_upper": 0.33}}}}})";
  std::filesystem::create_directories(dir.file("out"));
  tlt::write_file(dir.file("out") + "/report.json", report);
  tlt::write_file(dir.file("run.ini"), "[run]\noutput = " + dir.file("out") + "\n");

  CommandOptions opts;
  opts.config_path = dir.file("run.ini");
  CHECK(cmd_sensitivity(opts) == 0);
  json updated = read_json(dir.file("out") + "/report.json");
  const auto& th = updated["steps"]["step5_interpretation"]["thresholds"];
  CHECK(th["significance_pos"].get<double>() == doctest::Approx(0.09));
  CHECK(th["sign_reversal_pos"].get<double>() == doctest::Approx(0.33));
  CHECK(std::filesystem::exists(dir.file("out") + "/sensitivity_curve.csv"));
}

TEST_CASE("cmd_sensitivity without an estimate exits 1") {
  tlt::TempDir dir("cli_sens_none");
  tlt::write_file(dir.file("run.ini"), "[run]\noutput = " + dir.file("out") + "\n");
  CommandOptions opts;
  opts.config_path = dir.file("run.ini");
  CHECK(cmd_sensitivity(opts) == 1);  // no report at all

  std::filesystem::create_directories(dir.file("out"));
  tlt::write_file(dir.file("out") + "/report.json",
                  R"({"steps": {"step4_estimation": {"status": "not_run"}}})");
  CHECK(cmd_sensitivity(opts) == 1);  // estimate missing
}

TEST_CASE("cmd_simulate: runs a small study and writes summaries") {
  tlt::TempDir dir("cli_sim");
  std::string cfg =
      "[run]\n"
      "output = " + dir.file("out") + "\n"
      "[dgp]\n"
      "covariates = w1\n"
      "w1 = bernoulli(0.5)\n"
      "treatment_model = 0.2*w1\n"
      "outcome_model = -1 + 0.8*A\n"
      "[simulation]\n"
      "n = 200\n"
      "reps = 2\n"
      "mc_size = 100000\n"
      "[estimator.tmle_main]\n"
      "kind = tmle\n"
      "q_library = logistic\n"
      "g_library = logistic\n"
      "v = 2\n";
  tlt::write_file(dir.file("run.ini"), cfg);
  CommandOptions opts;
  opts.config_path = dir.file("run.ini");
  CHECK(cmd_simulate(opts) == 0);
  json summary = read_json(dir.file("out") + "/simulation_summary.json");
  CHECK(summary["reps"] == 2);
  CHECK(summary["true_rd"].get<double>() ==
        doctest::Approx(expit(-0.2) - expit(-1.0)).epsilon(1e-6));
  REQUIRE(summary["estimators"].size() == 1);
  CHECK(summary["estimators"][0].contains("coverage"));
  CHECK(std::filesystem::exists(dir.file("out") + "/simulation_summary.csv"));
}

TEST_CASE("cmd_simulate: reps=1 omits the sd, missing dgp exits 1") {
  tlt::TempDir dir("cli_sim1");
  std::string cfg =
      "[run]\n"
      "output = " + dir.file("out") + "\n"
      "[dgp]\n"
      "covariates = w1\n"
      "w1 = bernoulli(0.5)\n"
      "treatment_model = 0\n"
      "outcome_model = -1 + 0.5*A\n"
      "[simulation]\n"
      "n = 120\n"
      "reps = 1\n"
      "mc_size = 100000\n"
      "[estimator.truth]\n"
      "kind = oracle\n"
      "oracle_value = 0.1\n";
  tlt::write_file(dir.file("run.ini"), cfg);
  CommandOptions opts;
  opts.config_path = dir.file("run.ini");
  CHECK(cmd_simulate(opts) == 0);
  json summary = read_json(dir.file("out") + "/simulation_summary.json");
  CHECK_FALSE(summary["estimators"][0].contains("sd_estimate"));

  tlt::write_file(dir.file("nodgp.ini"), "[run]\noutput = " + dir.file("out2") + "\n");
  opts.config_path = dir.file("nodgp.ini");
  CHECK(cmd_simulate(opts) == 1);
}

namespace {

std::string dataset_csv(const Dataset& ds) {
  std::string csv;
  for (std::size_t j = 0; j < ds.columns().size(); ++j) {
    csv += (j ? "," : "") + ds.columns()[j].spec.name;
  }
  csv += "\n";
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 0; j < ds.columns().size(); ++j) {
      if (j) csv += ",";
      std::ostringstream os;
      os.precision(17);
      os << ds.columns()[j].values[i];
      csv += os.str();
    }
    csv += "\n";
  }
  return csv;
}

}  // namespace

TEST_CASE("cmd_estimate on a simulated cohort with the default library roster") {
  tlt::TempDir dir("cli_dgpa");
  tlt::write_file(dir.file("cohort.csv"), dataset_csv(generate(dgp_a(), 2000, 3)));
  std::string cfg =
      "[run]\n"
      "question = synthetic check\n"
      "data = " + dir.file("cohort.csv") + "\n"
      "output = " + dir.file("out") + "\n"
      "seed = 42\n"
      "[columns]\n"
      "w1 = covariate, binary\n"
      "w2 = covariate, continuous\n"
      "w3 = covariate, continuous\n"
      "A = treatment, binary\n"
      "Y = outcome, binary\n"
      "[adjustment]\n"
      "columns = w1, w2, w3\n"
      "[estimation]\n"
      "v = 5\n";  // default q/g libraries
  tlt::write_file(dir.file("run.ini"), cfg);
  CommandOptions opts;
  opts.config_path = dir.file("run.ini");
  REQUIRE(cmd_estimate(opts) == 0);

  json report = read_json(dir.file("out") + "/report.json");
  const auto& rd = report["steps"]["step4_estimation"]["estimates"]["rd"];
  double est = rd["estimate"].get<double>();
  double se = rd["se"].get<double>();
  // Frozen DGP-A oracle (Monte-Carlo 1e6, seed 42).
  CHECK(std::abs(est - 0.215837633926) < 3.0 * se);
  CHECK(std::abs(report["steps"]["step4_estimation"]["ic_mean_rd"].get<double>()) < 1e-8);
  // The default roster carries three learners in each library.
  CHECK(report["steps"]["step4_estimation"]["super_learner"]["q"]["library"].size() == 3);
  CHECK(report["steps"]["step4_estimation"]["super_learner"]["g"]["library"].size() == 3);
}

TEST_CASE("reports never carry estimation results past a failed validation") {
  tlt::TempDir dir("cli_order");
  std::string cfg =
      "[run]\n"
      "data = " + dir.file("missing.csv") + "\n"
      "output = " + dir.file("out") + "\n"
      "[columns]\n"
      "Y = outcome, binary\n"
      "A = treatment, binary\n";
  tlt::write_file(dir.file("run.ini"), cfg);
  CommandOptions opts;
  opts.config_path = dir.file("run.ini");
  CHECK(cmd_estimate(opts) == 2);  // load error -> validation failure
  json report = read_json(dir.file("out") + "/report.json");
  CHECK(report["steps"]["step4_estimation"]["status"] == "not_run");
  CHECK_FALSE(report["steps"]["step4_estimation"].contains("estimates"));
}
