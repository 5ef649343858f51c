#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qsld/dist_models.hpp"

namespace qsld {

enum class Scenario { kTailSlope, kFixedPoint, kVariationalGrid, kBandwidth, kTraceDump, kIdentitySuite };

std::string_view scenario_name(Scenario s);

enum class BandwidthRole { kQueue, kStore };

struct QosPair {
  double p;
  double q;
};

// Parsed experiment file. Keys a scenario does not read are rejected, so
// each field below is meaningful only for the scenarios noted.
struct ExperimentConfig {
  Scenario scenario = Scenario::kTailSlope;
  std::uint64_t seed = 0;
  bool seed_generated = false;
  std::optional<DistributionSpec> arrivals;
  std::optional<DistributionSpec> services;
  unsigned threads = 0;  // 0: all available cores
  std::string output_dir = "qsld_out";

  // tail_slope, fixed_point
  std::size_t replications = 0;
  std::size_t burn_in = 1000;
  // tail_slope
  std::vector<double> levels;
  // tail_slope, fixed_point, variational_grid, identity_suite
  double tolerance = 0.0;
  // fixed_point
  std::size_t n_block = 1000;
  std::vector<double> x_grid_departures;
  std::vector<double> x_grid_back_of_queue;
  // variational_grid
  std::vector<double> x1_grid;
  std::vector<double> x2_grid;
  std::vector<double> w_grid;
  std::size_t grid_points = 30;
  std::size_t brute_force_points = 21;
  // bandwidth
  std::vector<QosPair> targets;
  BandwidthRole role = BandwidthRole::kQueue;
  // trace_dump, identity_suite
  std::size_t length = 1000;
  std::size_t traces = 100;
  double w_init = 0.0;
  int quantize_bits = 0;

  // Input document with the seed filled in, echoed into reports.
  nlohmann::json echo;
};

// All problems with a config document; empty means valid. Besides schema
// errors this checks stability where a scenario needs it and the tilt
// relation for fixed_point (reported as a note, not a violation: a
// non-tilted pair runs as a negative control).
std::vector<std::string> validate(const nlohmann::json& doc);

// Parses and validates; throws Error(kConfigInvalid) listing every violation.
ExperimentConfig load_config(const nlohmann::json& doc);

// Reads a JSON file; throws Error(kConfigInvalid) on I/O or syntax errors.
nlohmann::json read_json_file(const std::string& path);

// {"kind": "exponential", "rate": ...} and friends. Throws kConfigInvalid.
DistributionSpec distribution_from_json(const nlohmann::json& node);
nlohmann::json distribution_to_json(const DistributionSpec& spec);

}  // namespace qsld
