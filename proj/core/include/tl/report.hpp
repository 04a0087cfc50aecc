#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tl/data.hpp"
#include "tl/diagnostics.hpp"
#include "tl/sensitivity.hpp"
#include "tl/sim.hpp"

namespace tl {

inline constexpr const char* kToolName = "tlearn";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kReportSchemaVersion = "1";

// Shortest round-trip decimal representation; locale-independent.
std::string format_double(double v);

// Writes via a temporary file and rename so readers never see partial output.
void write_text_atomic(const std::string& path, const std::string& content);

void ensure_directory(const std::string& dir);

// Plot-ready CSV exports (headers documented in the README).
void write_positivity_csv(const std::string& path, const PositivityTable& table);
void write_overlap_csv(const std::string& path, const OverlapSummary& overlap);
void write_dose_csv(const std::string& path, const std::vector<DoseBin>& bins);
void write_sensitivity_csv(const std::string& path, const SensitivityCurve& curve);
void write_replication_csv(const std::string& path, const ReplicationSummary& summary);

// Timestamped sidecar so report.json itself stays byte-reproducible.
void write_meta_file(const std::string& path, const std::string& command,
                     const std::string& config_path);

}  // namespace tl
