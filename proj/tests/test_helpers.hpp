#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tl/data.hpp"

namespace tlt {

// Fresh scratch directory under the system temp root; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("tlearn_test_" + tag + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::filesystem::path path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// Age-group cohort with 225 rows: per-group (control, treated) counts
// (2,0), (9,7), (37,26), (50,29), (38,19), (4,1), (3,0). Controls carry dose
// 0; treated doses cycle through {5, 15, 25, 35, 45, 55}. The outcome fires
// on every 7th row.
struct Table1Cohort {
  std::vector<std::string> age;
  std::vector<double> dose;
  std::vector<double> edema;
};

inline Table1Cohort table1_cohort() {
  const std::vector<std::pair<std::string, std::pair<int, int>>> groups = {
      {"16-20", {2, 0}}, {"21-25", {9, 7}},  {"26-30", {37, 26}}, {"31-35", {50, 29}},
      {"36-40", {38, 19}}, {"41-45", {4, 1}}, {"46-50", {3, 0}},
  };
  const double doses[] = {5, 15, 25, 35, 45, 55};
  Table1Cohort t;
  int row = 0, treated_idx = 0;
  for (const auto& [label, counts] : groups) {
    for (int i = 0; i < counts.first; ++i, ++row) {
      t.age.push_back(label);
      t.dose.push_back(0.0);
      t.edema.push_back(row % 7 == 0 ? 1.0 : 0.0);
    }
    for (int i = 0; i < counts.second; ++i, ++row, ++treated_idx) {
      t.age.push_back(label);
      t.dose.push_back(doses[treated_idx % 6]);
      t.edema.push_back(row % 7 == 0 ? 1.0 : 0.0);
    }
  }
  return t;
}

inline std::string table1_csv() {
  Table1Cohort t = table1_cohort();
  std::string csv = "age_group,dose,edema\n";
  for (std::size_t i = 0; i < t.age.size(); ++i) {
    csv += t.age[i] + "," + std::to_string(t.dose[i]) + "," +
           std::to_string(static_cast<int>(t.edema[i])) + "\n";
  }
  return csv;
}

inline std::vector<tl::ColumnSpec> table1_specs() {
  return {
      {"age_group", tl::Role::covariate, tl::Timing::baseline, tl::Kind::categorical},
      {"dose", tl::Role::dose, tl::Timing::baseline, tl::Kind::continuous},
      {"edema", tl::Role::outcome, tl::Timing::baseline, tl::Kind::binary},
  };
}

// Builds a dataset directly from numeric vectors (bypasses CSV loading).
inline tl::Dataset make_dataset(
    const std::vector<std::pair<tl::ColumnSpec, std::vector<double>>>& cols) {
  std::vector<tl::Column> out;
  std::size_t n = cols.empty() ? 0 : cols.front().second.size();
  for (const auto& [spec, values] : cols) {
    tl::Column c;
    c.spec = spec;
    c.values = values;
    out.push_back(std::move(c));
  }
  return tl::Dataset(std::move(out), n);
}

}  // namespace tlt
