#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qsld/bandwidth.hpp"
#include "qsld/config.hpp"
#include "qsld/error.hpp"
#include "qsld/runner.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFail = 1;
constexpr int kExitConfigError = 2;

int cmd_run(const std::string& path) {
  const qsld::ExperimentConfig cfg = qsld::load_config(qsld::read_json_file(path));
  const qsld::RunResult res = qsld::run(cfg);
  for (const auto& c : res.checks) {
    std::printf("%-30s %s  value=%.6g tol=%.3g\n", c.name.c_str(), c.passed ? "PASS" : "FAIL", c.value,
                c.tolerance);
  }
  for (const auto& e : res.errors) std::fprintf(stderr, "error: %s\n", e.c_str());
  std::printf("seed=%llu output=%s overall=%s\n", static_cast<unsigned long long>(cfg.seed),
              res.output_dir.string().c_str(), res.passed ? "PASS" : "FAIL");
  return res.passed ? kExitPass : kExitCheckFail;
}

int cmd_validate(const std::string& path) {
  const std::vector<std::string> violations = qsld::validate(qsld::read_json_file(path));
  for (const auto& v : violations) std::printf("%s\n", v.c_str());
  if (violations.empty()) std::printf("%s: valid\n", path.c_str());
  return violations.empty() ? kExitPass : kExitConfigError;
}

int cmd_bandwidth(const std::vector<double>& ps, const std::vector<double>& qs, const std::string& spec_path,
                  const std::string& role) {
  const qsld::DistributionSpec spec = qsld::distribution_from_json(qsld::read_json_file(spec_path));
  std::printf("p,q,theta_p,bandwidth\n");
  int status = kExitPass;
  for (double p : ps) {
    for (double q : qs) {
      const qsld::QosTarget target(p, q);
      try {
        const double bw = role == "store" ? qsld::effective_bandwidth_store(target, spec)
                                          : qsld::effective_bandwidth_queue(target, spec);
        std::printf("%.17g,%.17g,%.17g,%.17g\n", p, q, target.theta_p(), bw);
      } catch (const qsld::Error& e) {
        if (e.code() != qsld::ErrorCode::kThetaOutOfDomain) throw;
        std::printf("%.17g,%.17g,%.17g,%s\n", p, q, target.theta_p(), "ThetaOutOfDomain");
        status = kExitCheckFail;
      }
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Queue/store large-deviation experiments"};
  app.require_subcommand(1);

  std::string run_path;
  auto* run = app.add_subcommand("run", "Run an experiment config and write reports");
  run->add_option("config", run_path, "Path to the JSON config")->required()->check(CLI::ExistingFile);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "List config violations");
  validate->add_option("config", validate_path, "Path to the JSON config")->required()->check(CLI::ExistingFile);

  std::vector<double> ps;
  std::vector<double> qs;
  std::string spec_path;
  std::string role = "queue";
  auto* bw = app.add_subcommand("bandwidth", "Effective bandwidth for tail targets P(w >= q) <= p");
  bw->add_option("--p", ps, "Target probabilities")->required();
  bw->add_option("--q", qs, "Workload levels")->required();
  bw->add_option("--spec", spec_path, "JSON distribution node (services for queue, arrivals for store)")
      ->required()
      ->check(CLI::ExistingFile);
  bw->add_option("--role", role, "queue or store")->check(CLI::IsMember({"queue", "store"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitPass : kExitConfigError;
  }

  try {
    if (*run) return cmd_run(run_path);
    if (*validate) return cmd_validate(validate_path);
    return cmd_bandwidth(ps, qs, spec_path, role);
  } catch (const qsld::Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    if (e.code() == qsld::ErrorCode::kConfigInvalid || e.code() == qsld::ErrorCode::kInvalidParameter) {
      return kExitConfigError;
    }
    return kExitCheckFail;
  }
}
