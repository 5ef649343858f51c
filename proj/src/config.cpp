#include "qsld/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "qsld/error.hpp"

namespace qsld {
namespace {

using nlohmann::json;

// Parsed documents give unsigned integers; built ones may give signed.
bool is_nonnegative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

const std::map<std::string, Scenario, std::less<>> kScenarios = {
    {"tail_slope", Scenario::kTailSlope},
    {"fixed_point", Scenario::kFixedPoint},
    {"variational_grid", Scenario::kVariationalGrid},
    {"bandwidth", Scenario::kBandwidth},
    {"trace_dump", Scenario::kTraceDump},
    {"identity_suite", Scenario::kIdentitySuite},
};

const std::set<std::string> kCommonKeys = {"scenario", "seed", "arrivals", "services", "threads", "output_dir"};

std::set<std::string> scenario_keys(Scenario s) {
  switch (s) {
    case Scenario::kTailSlope: return {"replications", "burn_in", "levels", "tolerance"};
    case Scenario::kFixedPoint:
      return {"replications", "burn_in", "n_block", "x_grid_departures", "x_grid_back_of_queue", "tolerance"};
    case Scenario::kVariationalGrid:
      return {"x1_grid", "x2_grid", "w_grid", "tolerance", "grid_points", "brute_force_points"};
    case Scenario::kBandwidth: return {"targets", "role"};
    case Scenario::kTraceDump: return {"length", "w_init", "quantize_bits"};
    case Scenario::kIdentitySuite: return {"traces", "length", "tolerance"};
  }
  return {};
}

// Collects violations as "path: message" while reading typed fields.
class Reader {
 public:
  Reader(const json& node, std::string path, std::vector<std::string>& out)
      : node_(node), path_(std::move(path)), out_(out) {}

  bool has(const std::string& key) const { return node_.contains(key); }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  void fail(const std::string& key, const std::string& message) { out_.push_back(at(key) + ": " + message); }

  double real(const std::string& key, double fallback, bool required = false) {
    if (!has(key)) {
      if (required) fail(key, "missing");
      return fallback;
    }
    const json& v = node_.at(key);
    if (!v.is_number()) {
      fail(key, "expected a number");
      return fallback;
    }
    return v.get<double>();
  }

  double positive(const std::string& key, double fallback, bool required = false) {
    const double v = real(key, fallback, required);
    if (has(key) && !(v > 0.0)) fail(key, "must be positive");
    return v;
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback, std::uint64_t min_value) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!is_nonnegative_integer(v)) {
      fail(key, "expected a nonnegative integer");
      return fallback;
    }
    const auto n = v.get<std::uint64_t>();
    if (n < min_value) fail(key, "must be at least " + std::to_string(min_value));
    return n;
  }

  std::vector<double> grid(const std::string& key, std::vector<double> fallback, bool positive_only) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_array() || v.empty()) {
      fail(key, "expected a nonempty array of numbers");
      return fallback;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        fail(key + "[" + std::to_string(i) + "]", "expected a number");
        return fallback;
      }
      out.push_back(v[i].get<double>());
      if (positive_only ? !(out.back() > 0.0) : !(out.back() >= 0.0)) {
        fail(key + "[" + std::to_string(i) + "]", positive_only ? "must be positive" : "must be >= 0");
      }
    }
    return out;
  }

  std::string text(const std::string& key, std::string fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_string()) {
      fail(key, "expected a string");
      return fallback;
    }
    return v.get<std::string>();
  }

  void reject_unknown(const std::set<std::string>& allowed, const std::string& context) {
    for (const auto& [key, value] : node_.items()) {
      if (!allowed.count(key)) fail(key, "unknown key" + context);
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::vector<std::string>& out_;
};

std::optional<DistributionSpec> parse_distribution(const json& node, const std::string& path,
                                                   std::vector<std::string>& out) {
  if (!node.is_object()) {
    out.push_back(path + ": expected an object with a \"kind\"");
    return std::nullopt;
  }
  Reader r(node, path, out);
  const std::size_t before = out.size();
  const std::string kind = r.text("kind", "");
  try {
    if (kind == "exponential") {
      r.reject_unknown({"kind", "rate"}, " for exponential");
      const double rate = r.real("rate", 1.0, true);
      if (out.size() == before) return DistributionSpec(Exponential{rate});
    } else if (kind == "deterministic") {
      r.reject_unknown({"kind", "value"}, " for deterministic");
      const double value = r.real("value", 1.0, true);
      if (out.size() == before) return DistributionSpec(Deterministic{value});
    } else if (kind == "two_point") {
      r.reject_unknown({"kind", "low", "high", "prob_high"}, " for two_point");
      const double low = r.real("low", 0.0, true);
      const double high = r.real("high", 1.0, true);
      const double prob = r.real("prob_high", 0.5, true);
      if (out.size() == before) return DistributionSpec(TwoPoint{low, high, prob});
    } else if (kind == "gamma") {
      r.reject_unknown({"kind", "shape", "rate"}, " for gamma");
      const double shape = r.real("shape", 1.0, true);
      const double rate = r.real("rate", 1.0, true);
      if (out.size() == before) return DistributionSpec(Gamma{shape, rate});
    } else if (out.size() == before) {
      r.fail("kind", kind.empty() ? "missing" : "unknown distribution kind \"" + kind + "\"");
    }
  } catch (const Error& e) {
    out.push_back(path + ": " + e.what());
  }
  return std::nullopt;
}

std::vector<double> scaled(std::vector<double> factors, double by) {
  for (double& f : factors) f *= by;
  return factors;
}

// Schema pass; fills `cfg` as far as the document allows.
void parse_into(const json& doc, ExperimentConfig& cfg, std::vector<std::string>& out) {
  if (!doc.is_object()) {
    out.push_back("config: expected a JSON object");
    return;
  }
  Reader r(doc, "", out);
  const std::string name = r.text("scenario", "");
  const auto it = kScenarios.find(name);
  if (it == kScenarios.end()) {
    r.fail("scenario", name.empty() ? "missing" : "unknown scenario \"" + name + "\"");
    return;
  }
  cfg.scenario = it->second;
  std::set<std::string> allowed = kCommonKeys;
  allowed.merge(scenario_keys(cfg.scenario));
  r.reject_unknown(allowed, " for scenario " + name);

  if (r.has("seed")) {
    if (is_nonnegative_integer(doc.at("seed"))) cfg.seed = doc.at("seed").get<std::uint64_t>();
    else r.fail("seed", "expected a nonnegative 64-bit integer");
  }
  cfg.threads = static_cast<unsigned>(r.count("threads", 0, 0));
  cfg.output_dir = r.text("output_dir", cfg.output_dir);

  bool need_arrivals = true;
  bool need_services = true;
  if (cfg.scenario == Scenario::kBandwidth) {
    const std::string role = r.text("role", "queue");
    if (role == "queue") cfg.role = BandwidthRole::kQueue;
    else if (role == "store") cfg.role = BandwidthRole::kStore;
    else r.fail("role", "expected \"queue\" or \"store\"");
    need_arrivals = cfg.role == BandwidthRole::kStore;
    need_services = cfg.role == BandwidthRole::kQueue;
  }
  if (r.has("arrivals")) cfg.arrivals = parse_distribution(doc.at("arrivals"), "arrivals", out);
  else if (need_arrivals) r.fail("arrivals", "missing");
  if (r.has("services")) cfg.services = parse_distribution(doc.at("services"), "services", out);
  else if (need_services) r.fail("services", "missing");

  const double mean_a = cfg.arrivals ? mean(*cfg.arrivals) : 1.0;
  const double mean_s = cfg.services ? mean(*cfg.services) : 1.0;
  const std::vector<double> near_mean = {0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4};

  switch (cfg.scenario) {
    case Scenario::kTailSlope:
      cfg.replications = r.count("replications", 100000, 10000);
      cfg.burn_in = r.count("burn_in", 1000, 1);
      cfg.levels = r.grid("levels", {1.0, 2.0, 3.0}, true);
      if (!std::is_sorted(cfg.levels.begin(), cfg.levels.end()) ||
          std::adjacent_find(cfg.levels.begin(), cfg.levels.end()) != cfg.levels.end()) {
        r.fail("levels", "must be strictly increasing");
      }
      cfg.tolerance = r.positive("tolerance", 0.1);
      break;
    case Scenario::kFixedPoint:
      cfg.replications = r.count("replications", 4000, 1000);
      cfg.burn_in = r.count("burn_in", 1000, 1);
      cfg.n_block = r.count("n_block", 1000, 1000);
      cfg.x_grid_departures = r.grid("x_grid_departures", scaled(near_mean, mean_a), true);
      cfg.x_grid_back_of_queue = r.grid("x_grid_back_of_queue", scaled(near_mean, mean_s), true);
      cfg.tolerance = r.positive("tolerance", 0.05);
      break;
    case Scenario::kVariationalGrid:
      cfg.x1_grid = r.grid("x1_grid", scaled({0.8, 0.9, 1.0, 1.1, 1.2}, mean_a), true);
      cfg.x2_grid = r.grid("x2_grid", scaled({0.8, 0.9, 1.0, 1.1, 1.2}, mean_s), true);
      cfg.w_grid = r.grid("w_grid", {0.0, 0.5, 1.0}, false);
      cfg.tolerance = r.positive("tolerance", 1e-3);
      cfg.grid_points = r.count("grid_points", 30, 3);
      cfg.brute_force_points = r.count("brute_force_points", 21, 0);
      break;
    case Scenario::kBandwidth:
      if (!r.has("targets")) {
        r.fail("targets", "missing");
      } else if (!doc.at("targets").is_array() || doc.at("targets").empty()) {
        r.fail("targets", "expected a nonempty array of {\"p\", \"q\"} objects");
      } else {
        const json& t = doc.at("targets");
        for (std::size_t i = 0; i < t.size(); ++i) {
          const std::string path = "targets[" + std::to_string(i) + "]";
          if (!t[i].is_object()) {
            out.push_back(path + ": expected an object");
            continue;
          }
          Reader tr(t[i], path, out);
          tr.reject_unknown({"p", "q"}, "");
          const double p = tr.real("p", 0.5, true);
          const double q = tr.positive("q", 1.0, true);
          if (tr.has("p") && !(p > 0.0 && p < 1.0)) tr.fail("p", "must lie in (0, 1)");
          cfg.targets.push_back({p, q});
        }
      }
      break;
    case Scenario::kTraceDump:
      cfg.length = r.count("length", 1000, 2);
      cfg.w_init = r.real("w_init", 0.0);
      if (!(cfg.w_init >= 0.0)) r.fail("w_init", "must be >= 0");
      cfg.quantize_bits = static_cast<int>(r.count("quantize_bits", 0, 0));
      if (cfg.quantize_bits > 40) r.fail("quantize_bits", "must be at most 40");
      break;
    case Scenario::kIdentitySuite:
      cfg.traces = r.count("traces", 100, 1);
      cfg.length = r.count("length", 10000, 2);
      cfg.tolerance = r.positive("tolerance", 1e-9);
      break;
  }
}

void semantic_checks(const ExperimentConfig& cfg, std::vector<std::string>& out) {
  const bool needs_stability = cfg.scenario == Scenario::kTailSlope || cfg.scenario == Scenario::kFixedPoint ||
                               cfg.scenario == Scenario::kVariationalGrid;
  if (needs_stability && cfg.arrivals && cfg.services && !(mean(*cfg.services) < mean(*cfg.arrivals))) {
    std::ostringstream msg;
    msg << "services: unstable pair, mean service " << mean(*cfg.services) << " is not below mean interarrival "
        << mean(*cfg.arrivals);
    out.push_back(msg.str());
  }
}

}  // namespace

std::string_view scenario_name(Scenario s) {
  for (const auto& [name, value] : kScenarios) {
    if (value == s) return name;
  }
  return "unknown";
}

std::vector<std::string> validate(const json& doc) {
  std::vector<std::string> out;
  ExperimentConfig cfg;
  parse_into(doc, cfg, out);
  if (out.empty()) semantic_checks(cfg, out);
  return out;
}

ExperimentConfig load_config(const json& doc) {
  std::vector<std::string> out;
  ExperimentConfig cfg;
  parse_into(doc, cfg, out);
  if (out.empty()) semantic_checks(cfg, out);
  if (!out.empty()) {
    std::string msg = "invalid config:";
    for (const auto& v : out) msg += "\n  " + v;
    throw Error(ErrorCode::kConfigInvalid, msg);
  }
  cfg.echo = doc;
  if (!doc.contains("seed")) {
    std::random_device rd;
    cfg.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    cfg.seed_generated = true;
    cfg.echo["seed"] = cfg.seed;
  }
  return cfg;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigInvalid, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfigInvalid, path + ": " + e.what());
  }
}

DistributionSpec distribution_from_json(const json& node) {
  std::vector<std::string> out;
  auto spec = parse_distribution(node, "spec", out);
  if (!spec) {
    std::string msg = "invalid distribution:";
    for (const auto& v : out) msg += "\n  " + v;
    throw Error(ErrorCode::kConfigInvalid, msg);
  }
  return *spec;
}

json distribution_to_json(const DistributionSpec& spec) {
  return std::visit(
      [](const auto& law) -> json {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, Exponential>) return {{"kind", "exponential"}, {"rate", law.rate}};
        if constexpr (std::is_same_v<T, Deterministic>) return {{"kind", "deterministic"}, {"value", law.value}};
        if constexpr (std::is_same_v<T, TwoPoint>) {
          return {{"kind", "two_point"}, {"low", law.low}, {"high", law.high}, {"prob_high", law.prob_high}};
        }
        if constexpr (std::is_same_v<T, Gamma>) return {{"kind", "gamma"}, {"shape", law.shape}, {"rate", law.rate}};
      },
      spec.law());
}

}  // namespace qsld
