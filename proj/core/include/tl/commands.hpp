#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace tl {

// CLI entry points. Each loads the run configuration, executes one roadmap
// stage, writes `report.json` (plus CSV side files) under the output
// directory, and returns a process exit code:
//   0 ok, 1 usage/config, 2 validation failure, 3 identification concern,
//   4 estimation failure.
struct CommandOptions {
  std::string config_path;
  std::optional<std::string> out_dir;      // overrides [run] output
  std::optional<std::uint64_t> seed;       // overrides [run] seed
  std::optional<int> threads;              // overrides [run] threads
  std::optional<std::string> report_path;  // sensitivity: prior report location
};

int cmd_validate(const CommandOptions& opts);
int cmd_diagnose(const CommandOptions& opts);
int cmd_estimate(const CommandOptions& opts);
int cmd_sensitivity(const CommandOptions& opts);
int cmd_simulate(const CommandOptions& opts);

}  // namespace tl
