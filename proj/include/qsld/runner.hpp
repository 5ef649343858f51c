#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsld/config.hpp"

namespace qsld {

struct CheckOutcome {
  std::string name;
  bool passed;
  double value;
  double tolerance;
  std::string detail;
};

struct RunResult {
  bool passed = false;
  std::vector<CheckOutcome> checks;
  std::vector<std::string> errors;  // library errors, verbatim
  std::filesystem::path output_dir;
  nlohmann::json summary;
};

// $QSLD_OUTPUT_DIR when set and nonempty, else config.output_dir.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

// Runs the scenario and writes summary.json plus its CSV files. passed is
// false when any check fails or the scenario raised an error.
RunResult run(const ExperimentConfig& config);

// JSON number, or "inf" / "-inf" / "nan" for non-finite values.
nlohmann::json json_number(double v);

}  // namespace qsld
