// Command-line front end: validate | diagnose | estimate | sensitivity |
// simulate, each driven by a single run-configuration file.

#include <cstdlib>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tl/commands.hpp"

namespace {

struct RawOptions {
  std::string config;
  std::string out;
  std::int64_t seed = -1;
  int threads = 0;
  std::string report;
};

tl::CommandOptions to_options(const RawOptions& raw) {
  tl::CommandOptions opts;
  opts.config_path = raw.config;
  if (!raw.out.empty()) opts.out_dir = raw.out;
  if (raw.seed >= 0) opts.seed = static_cast<std::uint64_t>(raw.seed);
  if (raw.threads > 0) {
    opts.threads = raw.threads;
  } else if (const char* env = std::getenv("TLEARN_THREADS")) {
    opts.threads = std::max(1, std::atoi(env));
  }
  if (!raw.report.empty()) opts.report_path = raw.report;
  return opts;
}

void add_common(CLI::App* cmd, RawOptions& raw) {
  cmd->add_option("--config", raw.config, "run configuration file")->required();
  cmd->add_option("--out", raw.out, "output directory (overrides [run] output)");
  cmd->add_option("--seed", raw.seed, "seed override");
  cmd->add_option("--threads", raw.threads, "worker threads (or TLEARN_THREADS)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"targeted point-treatment effect estimation"};
  app.require_subcommand(1);

  RawOptions raw;
  int (*selected)(const tl::CommandOptions&) = nullptr;

  auto* validate = app.add_subcommand("validate", "check data against the declared model");
  add_common(validate, raw);
  validate->callback([&] { selected = tl::cmd_validate; });

  auto* diagnose = app.add_subcommand("diagnose", "outcome-blind identification diagnostics");
  add_common(diagnose, raw);
  diagnose->callback([&] { selected = tl::cmd_diagnose; });

  auto* estimate = app.add_subcommand("estimate", "full targeted estimation pipeline");
  add_common(estimate, raw);
  estimate->callback([&] { selected = tl::cmd_estimate; });

  auto* sensitivity =
      app.add_subcommand("sensitivity", "causal-gap sensitivity from a prior report");
  add_common(sensitivity, raw);
  sensitivity->add_option("--report", raw.report, "report.json from a prior estimate run");
  sensitivity->callback([&] { selected = tl::cmd_sensitivity; });

  auto* simulate = app.add_subcommand("simulate", "known-truth replication study");
  add_common(simulate, raw);
  simulate->callback([&] { selected = tl::cmd_simulate; });

  CLI11_PARSE(app, argc, argv);
  return selected(to_options(raw));
}
