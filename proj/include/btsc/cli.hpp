#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "btsc/report.hpp"

namespace btsc::cli {

/// Numeric settings of a fit-eval run, read from the JSON config.
struct RunConfig {
  std::filesystem::path dataset;
  ReportConfig report;
  bool time_curve = true;
  bool dump_features = false;
};

RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);

// Entry point shared by the btsc binary and the tests; `args` excludes the
// program name. Returns the exit code: 0 success, 1 usage, 2 I/O,
// 3 data invariant, 4 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace btsc::cli
