#include "qsld/runner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "qsld/bandwidth.hpp"
#include "qsld/error.hpp"
#include "qsld/mc_estimator.hpp"
#include "qsld/parallel.hpp"
#include "qsld/queue_core.hpp"
#include "qsld/ratefn.hpp"
#include "qsld/variational.hpp"
#include "qsld/version.hpp"

namespace qsld {
namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Minimal CSV table: header plus rows of preformatted cells.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

  Csv& row() {
    rows_.emplace_back();
    return *this;
  }
  Csv& cell(double v) { return cell(fmt(v)); }
  Csv& cell(std::size_t v) { return cell(std::to_string(v)); }
  Csv& cell(bool v) { return cell(std::string(v ? "true" : "false")); }
  Csv& cell(std::string v) {
    rows_.back().push_back(std::move(v));
    return *this;
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kConfigInvalid, "cannot write " + path.string());
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
      out << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct Context {
  Context(const ExperimentConfig& config, std::filesystem::path out) : cfg(config), dir(std::move(out)) {}

  const ExperimentConfig& cfg;
  std::filesystem::path dir;
  json analytic = json::object();
  json results = json::object();
  std::vector<std::string> files;
  std::vector<CheckOutcome> checks;

  void check(std::string name, bool passed, double value, double tolerance, std::string detail = {}) {
    checks.push_back({std::move(name), passed, value, tolerance, std::move(detail)});
  }
  void save(const Csv& csv, const std::string& name) {
    csv.write(dir / name);
    files.push_back(name);
  }
};

bool is_tilt_of(const DistributionSpec& arrivals, const DistributionSpec& services, double delta) {
  if (!std::isfinite(delta)) return false;
  try {
    return parameter_distance(tilt(services, delta), arrivals) <= 1e-9;
  } catch (const Error&) {
    return false;
  }
}

void run_tail_slope(Context& ctx) {
  const auto& c = ctx.cfg;
  const DeltaResult d = cross_checked_delta(*c.arrivals, *c.services);
  ctx.analytic["delta"] = json_number(d.delta);
  ctx.analytic["delta_method_agreement"] = json_number(d.method_agreement);
  ctx.analytic["delta_at_domain_boundary"] = d.at_domain_boundary;

  const TailEstimate est =
      estimate_tail_slope(*c.arrivals, *c.services, c.levels, c.replications, c.burn_in, c.seed, c.threads);
  Csv csv({"q", "exceedances", "prob", "prob_stderr", "log_prob", "used_in_fit"});
  for (const auto& l : est.levels) {
    csv.row().cell(l.q).cell(l.exceedances).cell(l.prob).cell(l.prob_stderr).cell(l.log_prob).cell(l.used_in_fit);
  }
  ctx.save(csv, "tail_levels.csv");
  ctx.results["delta_hat"] = json_number(est.delta_hat);
  ctx.results["slope_stderr"] = json_number(est.slope_stderr);
  ctx.results["intercept"] = json_number(est.intercept);
  ctx.results["insufficient_tail"] = est.insufficient_tail;
  ctx.results["monotone"] = est.monotone;

  const double rel = std::abs(est.delta_hat - d.delta) / d.delta;
  ctx.check("delta_hat_relative_error", std::isfinite(d.delta) && rel <= c.tolerance, rel, c.tolerance,
            std::isfinite(d.delta) ? "" : "analytic delta is infinite");
}

void write_rate_csv(Context& ctx, const EmpiricalRate& er, const std::vector<double>& analytic,
                    const std::string& analytic_name, const std::string& file) {
  Csv csv({"x", "empirical_rate", analytic_name, "deviation"});
  for (std::size_t i = 0; i < er.x_grid.size(); ++i) {
    const double dev = std::abs(er.rate_values[i] - analytic[i]);
    csv.row().cell(er.x_grid[i]).cell(er.rate_values[i]).cell(analytic[i]).cell(std::isnan(dev) ? kInf : dev);
  }
  ctx.save(csv, file);
}

json rate_summary(const EmpiricalRate& er) {
  return {{"sequence", std::string(sequence_name(er.kind))},
          {"block_mean", json_number(er.block_mean)},
          {"block_sum_std", json_number(er.block_sum_std)},
          {"theta_max", json_number(er.theta_max)},
          {"theta_range_shrunk", er.theta_range_shrunk},
          {"convexity_violations", er.convexity_violations}};
}

void run_fixed_point(Context& ctx) {
  const auto& c = ctx.cfg;
  FixedPointConfig fc;
  fc.n_block = c.n_block;
  fc.replications = c.replications;
  fc.burn_in = c.burn_in;
  fc.x_grid_departures = c.x_grid_departures;
  fc.x_grid_back_of_queue = c.x_grid_back_of_queue;
  fc.tolerance = c.tolerance;
  fc.seed = c.seed;
  fc.threads = c.threads;
  const FixedPointReport rep = fixed_point_report(*c.arrivals, *c.services, fc);

  ctx.analytic["delta"] = json_number(rep.delta);
  ctx.analytic["tilt_distance"] = json_number(rep.tilt_distance);
  ctx.analytic["is_tilted"] = rep.is_tilted;
  write_rate_csv(ctx, rep.departures, rep.analytic_arrival_rate, "arrival_rate", "fixed_point_departures.csv");
  write_rate_csv(ctx, rep.back_of_queue, rep.analytic_service_rate, "service_rate",
                 "fixed_point_back_of_queue.csv");

  Csv cgf_csv({"sequence", "theta", "scaled_cgf"});
  for (const EmpiricalRate* er : {&rep.departures, &rep.back_of_queue}) {
    for (std::size_t i = 0; i < er->theta_grid.size(); ++i) {
      cgf_csv.row().cell(std::string(sequence_name(er->kind))).cell(er->theta_grid[i]).cell(er->scaled_cgf[i]);
    }
  }
  ctx.save(cgf_csv, "fixed_point_scaled_cgf.csv");

  ctx.results["departures"] = rate_summary(rep.departures);
  ctx.results["back_of_queue"] = rate_summary(rep.back_of_queue);
  ctx.results["max_deviation_departures"] = json_number(rep.max_deviation_departures);
  ctx.results["max_deviation_back_of_queue"] = json_number(rep.max_deviation_back_of_queue);
  ctx.results["within_tolerance"] = rep.within_tolerance;
  ctx.results["role"] = rep.is_tilted ? "tilted pair" : "negative control (NotTilted)";

  const double worst = std::max(rep.max_deviation_departures, rep.max_deviation_back_of_queue);
  std::string detail = rep.is_tilted ? "tilted pair: deviations must stay within tolerance"
                                     : "NotTilted negative control: deviations are expected to exceed tolerance";
  ctx.check("fixed_point_expectation", rep.matches_expectation, worst, rep.tolerance, detail);
}

void run_variational_grid(Context& ctx) {
  const auto& c = ctx.cfg;
  const DeltaResult d = delta_by_root(*c.arrivals, *c.services);
  const VariationalProblem problem(*c.arrivals, *c.services, d.delta);
  const bool tilted = is_tilt_of(*c.arrivals, *c.services, d.delta);
  ctx.analytic["delta"] = json_number(d.delta);
  ctx.analytic["is_tilted"] = tilted;

  struct Row {
    double x1, x2, w;
    VariationalSolution sol;
    double closed;
    double brute;
  };
  std::vector<Row> rows;
  for (double x1 : c.x1_grid) {
    for (double x2 : c.x2_grid) {
      for (double w : c.w_grid) rows.push_back({x1, x2, w, {}, kInf, kInf});
    }
  }
  const MinimizeOptions opts{c.grid_points, 1e-7};
  parallel_for(rows.size(), c.threads, [&](std::size_t i) {
    Row& r = rows[i];
    r.sol = minimize_J(problem, r.x1, r.x2, r.w, opts);
    if (tilted) r.closed = d.delta * r.w + problem.rate_a()(r.x1) + problem.rate_s()(r.x2);
    if (c.brute_force_points > 0) r.brute = brute_force_two_phase_min(problem, r.x1, r.x2, r.w, c.brute_force_points);
  });

  Csv csv({"x1", "x2", "w", "J", "branch", "q", "tau", "v1", "v2", "single_busy_period", "two_phase",
           "closed_form", "brute_force", "phase_one_order_holds", "phase_two_bound_holds"});
  double min_value = kInf;
  double max_gap = 0.0;
  double worst_undercut = 0.0;
  for (const Row& r : rows) {
    const auto& s = r.sol;
    csv.row().cell(r.x1).cell(r.x2).cell(r.w).cell(s.value);
    csv.cell(std::string(s.branch == Branch::kSingleBusyPeriod ? "single_busy_period" : "two_phase"));
    csv.cell(s.witness.q).cell(s.witness.tau).cell(s.witness.v1).cell(s.witness.v2);
    csv.cell(s.single_busy_period_value).cell(s.two_phase_value).cell(r.closed).cell(r.brute);
    csv.cell(s.phase_one_order_holds).cell(s.phase_two_bound_holds);
    min_value = std::min(min_value, s.value);
    if (tilted) {
      const double gap = r.closed == s.value ? 0.0 : std::abs(r.closed - s.value);
      max_gap = std::max(max_gap, std::isnan(gap) ? kInf : gap);
    }
    if (std::isfinite(r.brute)) worst_undercut = std::max(worst_undercut, s.value - r.brute);
  }
  ctx.save(csv, "variational_grid.csv");

  // Joint convexity of J is not asserted; count chord violations along each
  // grid axis as a diagnostic.
  const std::size_t n1 = c.x1_grid.size(), n2 = c.x2_grid.size(), n3 = c.w_grid.size();
  const std::array<std::size_t, 3> extent = {n1, n2, n3};
  const std::array<std::size_t, 3> stride = {n2 * n3, n3, 1};
  const std::array<const std::vector<double>*, 3> axis = {&c.x1_grid, &c.x2_grid, &c.w_grid};
  std::size_t triples = 0;
  std::size_t violations = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::array<std::size_t, 3> idx = {i / stride[0], (i / stride[1]) % n2, i % n3};
    for (std::size_t k = 0; k < 3; ++k) {
      if (idx[k] + 2 >= extent[k]) continue;
      const double l = rows[i].sol.value;
      const double m = rows[i + stride[k]].sol.value;
      const double r = rows[i + 2 * stride[k]].sol.value;
      if (!std::isfinite(l) || !std::isfinite(r)) continue;
      const auto& g = *axis[k];
      const double t = (g[idx[k] + 1] - g[idx[k]]) / (g[idx[k] + 2] - g[idx[k]]);
      ++triples;
      if (m > (1 - t) * l + t * r + 1e-6) ++violations;
    }
  }
  ctx.results["convexity_triples"] = triples;
  ctx.results["convexity_violations"] = violations;
  ctx.results["points"] = rows.size();
  ctx.results["min_J"] = json_number(min_value);

  ctx.check("J_nonnegative", min_value >= 0.0, min_value, 0.0);
  if (c.brute_force_points > 0) {
    ctx.check("brute_force_no_undercut", worst_undercut <= c.tolerance, worst_undercut, c.tolerance);
  }
  if (tilted) ctx.check("fixed_point_gap", max_gap <= c.tolerance, max_gap, c.tolerance);
}

void run_bandwidth(Context& ctx) {
  const auto& c = ctx.cfg;
  const bool queue = c.role == BandwidthRole::kQueue;
  const DistributionSpec& spec = queue ? *c.services : *c.arrivals;
  ctx.analytic["role"] = queue ? "queue" : "store";
  ctx.analytic["mean"] = json_number(mean(spec));
  ctx.analytic["cgf_domain"] = {json_number(cgf_domain(spec).lo), json_number(cgf_domain(spec).hi)};

  Csv csv = queue ? Csv({"p", "q", "theta_p", "bandwidth", "bandwidth_by_inf", "delta_at_bandwidth", "error"})
                  : Csv({"p", "q", "theta_p", "bandwidth", "error"});
  double worst = 0.0;
  std::size_t failures = 0;
  json errors = json::array();
  for (const auto& t : c.targets) {
    const QosTarget target(t.p, t.q);
    csv.row().cell(t.p).cell(t.q).cell(target.theta_p());
    try {
      if (queue) {
        const double a = effective_bandwidth_queue(target, spec);
        const double a_inf = effective_bandwidth_queue_by_inf(target, spec);
        const double da = delta_of_deterministic_arrival(a, spec);
        csv.cell(a).cell(a_inf).cell(da).cell(std::string());
        worst = std::max(worst, std::abs(a - a_inf));
      } else {
        csv.cell(effective_bandwidth_store(target, spec)).cell(std::string());
      }
    } catch (const Error& e) {
      ++failures;
      errors.push_back(e.what());
      if (queue) csv.cell(std::string()).cell(std::string()).cell(std::string());
      else csv.cell(std::string());
      csv.cell(std::string(error_code_name(e.code())));
    }
  }
  ctx.save(csv, "bandwidth.csv");
  ctx.results["target_errors"] = errors;
  ctx.check("targets_attainable", failures == 0, static_cast<double>(failures), 0.0,
            "targets with theta_p outside the CGF domain cannot be met");
  if (queue) ctx.check("closed_form_vs_inf_definition", worst <= 1e-8, worst, 1e-8);
}

void run_trace_dump(Context& ctx) {
  const auto& c = ctx.cfg;
  const Trace tr = simulate_trace(*c.arrivals, *c.services, c.length, c.seed, {c.w_init, c.quantize_bits});
  {
    std::ofstream out(ctx.dir / "trace.csv", std::ios::binary);
    if (!out) throw Error(ErrorCode::kConfigInvalid, "cannot write trace.csv");
    write_trace_csv(out, tr, *c.arrivals, *c.services);
  }
  ctx.files.push_back("trace.csv");
  const InvariantReport inv = check_invariants(tr);
  const double worst = std::max({inv.lindley, inv.back2, inv.output_d, inv.b_negativity, inv.conservation});
  ctx.results["final_workload"] = json_number(tr.w.back());
  ctx.check("trace_invariants", worst <= 1e-9, worst, 1e-9);
}

void run_identity_suite(Context& ctx) {
  const auto& c = ctx.cfg;
  const bool positive_inputs = support_hull(*c.arrivals).lo > 0.0 && support_hull(*c.services).lo > 0.0;
  const std::vector<double> t_grid = {0.25, 0.5, 0.75, 1.0};
  struct Row {
    InvariantReport inv;
    double sup_diff;
    double phi;
  };
  std::vector<Row> rows(c.traces);
  const CounterRng root(c.seed);
  parallel_for(c.traces, c.threads, [&](std::size_t i) {
    CounterRng rng = root.split(i);
    const Trace tr = simulate_trace(*c.arrivals, *c.services, c.length, rng, {0.0, 32});
    std::vector<double> a_rev(tr.a.rbegin(), tr.a.rend());
    std::vector<double> s_rev(tr.s.rbegin(), tr.s.rend());
    rows[i] = {check_invariants(tr), std::abs(workload_sup_oracle(a_rev, s_rev) - tr.w.back()),
               phi_identity_check(tr, t_grid)};
  });

  Csv csv({"trace", "lindley", "back2", "output_d", "b_negativity", "conservation", "positive_outputs",
           "sup_oracle_diff", "phi_residual"});
  double worst = 0.0;
  double worst_sup = 0.0;
  double worst_phi = 0.0;
  bool positive = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    csv.row().cell(i).cell(r.inv.lindley).cell(r.inv.back2).cell(r.inv.output_d).cell(r.inv.b_negativity);
    csv.cell(r.inv.conservation).cell(r.inv.positive_outputs).cell(r.sup_diff).cell(r.phi);
    worst = std::max({worst, r.inv.lindley, r.inv.back2, r.inv.output_d, r.inv.b_negativity, r.inv.conservation});
    worst_sup = std::max(worst_sup, r.sup_diff);
    worst_phi = std::max(worst_phi, r.phi);
    positive = positive && r.inv.positive_outputs;
  }
  ctx.save(csv, "identity_suite.csv");
  ctx.results["inputs_positive"] = positive_inputs;
  ctx.check("trace_invariants", worst <= c.tolerance, worst, c.tolerance);
  ctx.check("sup_oracle_exact", worst_sup == 0.0, worst_sup, 0.0);
  ctx.check("phi_identity", worst_phi <= c.tolerance, worst_phi, c.tolerance);
  if (positive_inputs) ctx.check("positive_outputs", positive, positive ? 0.0 : 1.0, 0.0);
}

json module_versions() {
  json v = json::object();
  for (const char* m : {"dist_models", "ratefn", "queue_core", "mc_estimator", "variational", "bandwidth",
                        "cli_runner"}) {
    v[m] = kVersion;
  }
  return v;
}

}  // namespace

json json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  if (const char* env = std::getenv("QSLD_OUTPUT_DIR"); env && *env) return env;
  return config.output_dir;
}

RunResult run(const ExperimentConfig& config) {
  RunResult result;
  result.output_dir = resolve_output_dir(config);
  std::filesystem::create_directories(result.output_dir);
  Context ctx{config, result.output_dir};

  try {
    switch (config.scenario) {
      case Scenario::kTailSlope: run_tail_slope(ctx); break;
      case Scenario::kFixedPoint: run_fixed_point(ctx); break;
      case Scenario::kVariationalGrid: run_variational_grid(ctx); break;
      case Scenario::kBandwidth: run_bandwidth(ctx); break;
      case Scenario::kTraceDump: run_trace_dump(ctx); break;
      case Scenario::kIdentitySuite: run_identity_suite(ctx); break;
    }
  } catch (const Error& e) {
    result.errors.push_back(e.what());
  }

  result.checks = ctx.checks;
  result.passed = result.errors.empty() &&
                  std::all_of(ctx.checks.begin(), ctx.checks.end(), [](const auto& c) { return c.passed; });

  json checks = json::array();
  for (const auto& c : ctx.checks) {
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"value", json_number(c.value)},
                      {"tolerance", json_number(c.tolerance)},
                      {"detail", c.detail}});
  }
  json& s = result.summary;
  s["scenario"] = std::string(scenario_name(config.scenario));
  s["seed"] = config.seed;
  s["seed_generated"] = config.seed_generated;
  s["config"] = config.echo;
  s["versions"] = module_versions();
  if (config.arrivals) s["arrivals"] = config.arrivals->describe();
  if (config.services) s["services"] = config.services->describe();
  s["analytic"] = ctx.analytic;
  s["results"] = ctx.results;
  s["checks"] = checks;
  s["errors"] = result.errors;
  s["files"] = ctx.files;
  s["passed"] = result.passed;

  std::ofstream out(result.output_dir / "summary.json", std::ios::binary);
  out << s.dump(2) << '\n';
  return result;
}

}  // namespace qsld
