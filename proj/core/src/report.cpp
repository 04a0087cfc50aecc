#include "tl/report.hpp"

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "tl/csv.hpp"
#include "tl/error.hpp"

namespace tl {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

void write_text_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write file: " + tmp);
    out << content;
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ConfigError("cannot move '" + tmp + "' into place: " + ec.message());
}

void write_positivity_csv(const std::string& path, const PositivityTable& table) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : table.cells) {
    rows.push_back({c.level, std::to_string(c.n_control), std::to_string(c.n_treated)});
  }
  write_csv(path, {"level", "n_control", "n_treated"}, rows);
}

void write_overlap_csv(const std::string& path, const OverlapSummary& overlap) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t b = 0; b < overlap.control_bins.size(); ++b) {
    rows.push_back({format_double(0.05 * static_cast<double>(b)),
                    format_double(0.05 * static_cast<double>(b + 1)),
                    std::to_string(overlap.control_bins[b]),
                    std::to_string(overlap.treated_bins[b])});
  }
  write_csv(path, {"bin_lower", "bin_upper", "control", "treated"}, rows);
}

void write_dose_csv(const std::string& path, const std::vector<DoseBin>& bins) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& b : bins) {
    rows.push_back({b.label, std::to_string(b.n), std::to_string(b.events),
                    b.proportion ? format_double(*b.proportion) : ""});
  }
  write_csv(path, {"bin", "n", "events", "proportion"}, rows);
}

void write_sensitivity_csv(const std::string& path, const SensitivityCurve& curve) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : curve.rows) {
    rows.push_back({format_double(r.delta), format_double(r.delta_se_units),
                    format_double(r.estimate), format_double(r.lower),
                    format_double(r.upper)});
  }
  write_csv(path, {"delta", "delta_se_units", "estimate", "lower", "upper"}, rows);
}

void write_replication_csv(const std::string& path, const ReplicationSummary& summary) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& e : summary.estimators) {
    rows.push_back({e.name, std::to_string(e.reps), format_double(summary.true_rd),
                    format_double(e.mean_estimate), format_double(e.mean_bias),
                    e.sd_estimate ? format_double(*e.sd_estimate) : "",
                    e.mean_se ? format_double(*e.mean_se) : "",
                    e.coverage ? format_double(*e.coverage) : "",
                    e.mean_ci_width ? format_double(*e.mean_ci_width) : ""});
  }
  write_csv(path,
            {"estimator", "reps", "true_rd", "mean_estimate", "mean_bias", "sd_estimate",
             "mean_se", "coverage", "mean_ci_width"},
            rows);
}

void write_meta_file(const std::string& path, const std::string& command,
                     const std::string& config_path) {
  nlohmann::json meta;
  meta["tool"] = kToolName;
  meta["version"] = kToolVersion;
  meta["command"] = command;
  meta["config"] = config_path;
  auto now = std::chrono::system_clock::now();
  meta["written_at_unix_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();
  write_text_atomic(path, meta.dump(2) + "\n");
}

}  // namespace tl
