#include "qsld/mc_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "qsld/error.hpp"
#include "qsld/parallel.hpp"
#include "qsld/queue_core.hpp"
#include "qsld/ratefn.hpp"

namespace qsld {

std::vector<double> sample_stationary_workloads(const DistributionSpec& arrivals,
                                                const DistributionSpec& services, std::size_t replications,
                                                std::size_t burn_in, std::uint64_t seed, unsigned threads) {
  require_stable(arrivals, services);
  const CounterRng root(seed);
  std::vector<double> out(replications);
  parallel_for(replications, threads, [&](std::size_t i) {
    out[i] = loynes_stationary_workload(arrivals, services, burn_in, root.split(i));
  });
  return out;
}

namespace {

std::vector<std::size_t> exceedance_counts(std::span<const double> samples, std::span<const double> q_grid) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> counts(q_grid.size());
  for (std::size_t j = 0; j < q_grid.size(); ++j) {
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), q_grid[j]);
    counts[j] = static_cast<std::size_t>(sorted.end() - first);
  }
  return counts;
}

void require_level_grid(std::span<const double> q_grid) {
  if (q_grid.empty()) throw Error(ErrorCode::kInvalidParameter, "q_grid is empty");
  for (std::size_t j = 0; j < q_grid.size(); ++j) {
    if (!(q_grid[j] > 0.0) || (j > 0 && !(q_grid[j] > q_grid[j - 1]))) {
      throw Error(ErrorCode::kInvalidParameter, "q_grid must be positive and strictly increasing");
    }
  }
}

}  // namespace

TailEstimate fit_tail(std::span<const double> samples, std::span<const double> q_grid) {
  require_level_grid(q_grid);
  const double total = static_cast<double>(samples.size());
  const std::vector<std::size_t> counts = exceedance_counts(samples, q_grid);

  TailEstimate est;
  est.replications = samples.size();
  for (std::size_t j = 0; j < q_grid.size(); ++j) {
    TailLevel level;
    level.q = q_grid[j];
    level.exceedances = counts[j];
    level.prob = static_cast<double>(counts[j]) / total;
    level.prob_stderr = std::sqrt(level.prob * (1.0 - level.prob) / total);
    level.log_prob = std::log(level.prob);
    level.used_in_fit = counts[j] >= kMinExceedances && counts[j] < samples.size();
    if (!level.used_in_fit) est.insufficient_tail = true;
    if (j > 0 && level.prob > est.levels.back().prob) est.monotone = false;
    est.levels.push_back(level);
  }

  // Var(log p_hat) ~ (1 - p) / (N p).
  double sw = 0.0, swq = 0.0, swy = 0.0;
  std::size_t used = 0;
  for (const auto& l : est.levels) {
    if (!l.used_in_fit) continue;
    const double weight = total * l.prob / (1.0 - l.prob);
    sw += weight;
    swq += weight * l.q;
    swy += weight * l.log_prob;
    ++used;
  }
  if (used < 2) {
    throw Error(ErrorCode::kInsufficientTail, "fewer than two levels with at least " +
                                                  std::to_string(kMinExceedances) + " exceedances");
  }
  const double q_bar = swq / sw;
  const double y_bar = swy / sw;
  double sqq = 0.0, sqy = 0.0;
  for (const auto& l : est.levels) {
    if (!l.used_in_fit) continue;
    const double weight = total * l.prob / (1.0 - l.prob);
    sqq += weight * (l.q - q_bar) * (l.q - q_bar);
    sqy += weight * (l.q - q_bar) * (l.log_prob - y_bar);
  }
  est.slope = sqy / sqq;
  est.intercept = y_bar - est.slope * q_bar;
  est.slope_stderr = std::sqrt(1.0 / sqq);
  est.delta_hat = -est.slope;
  return est;
}

TailEstimate estimate_tail_slope(const DistributionSpec& arrivals, const DistributionSpec& services,
                                 std::span<const double> q_grid, std::size_t replications, std::size_t burn_in,
                                 std::uint64_t seed, unsigned threads) {
  require_stable(arrivals, services);
  require_level_grid(q_grid);
  if (replications < 10000) {
    throw Error(ErrorCode::kInvalidParameter, "tail estimation needs at least 1e4 replications");
  }
  const std::vector<double> samples =
      sample_stationary_workloads(arrivals, services, replications, burn_in, seed, threads);
  TailEstimate est = fit_tail(samples, q_grid);
  est.burn_in = burn_in;
  est.seed = seed;
  return est;
}

BurnInCheck burn_in_self_test(const DistributionSpec& arrivals, const DistributionSpec& services,
                              std::span<const double> q_grid, std::size_t replications, std::size_t burn_in,
                              std::uint64_t seed, unsigned threads) {
  require_level_grid(q_grid);
  const auto base = sample_stationary_workloads(arrivals, services, replications, burn_in, seed, threads);
  const auto longer = sample_stationary_workloads(arrivals, services, replications, 2 * burn_in, seed, threads);
  const auto c1 = exceedance_counts(base, q_grid);
  const auto c2 = exceedance_counts(longer, q_grid);
  const double total = static_cast<double>(replications);
  BurnInCheck check;
  for (std::size_t j = 0; j < q_grid.size(); ++j) {
    const double p1 = static_cast<double>(c1[j]) / total;
    const double p2 = static_cast<double>(c2[j]) / total;
    const double se = std::sqrt(std::max(p1 * (1.0 - p1), 1.0 / total) / total);
    check.shift_in_stderr.push_back(std::abs(p2 - p1) / se);
  }
  check.max_shift_in_stderr = *std::max_element(check.shift_in_stderr.begin(), check.shift_in_stderr.end());
  check.passes = check.max_shift_in_stderr <= 1.0;
  return check;
}

ChiSquareResult chi_square_from_counts(std::vector<std::size_t> observed, std::vector<double> expected) {
  if (observed.size() != expected.size() || observed.size() < 2) {
    throw Error(ErrorCode::kInvalidParameter, "chi-square needs matching bins, at least two");
  }
  double stat = 0.0;
  for (std::size_t j = 0; j < observed.size(); ++j) {
    if (!(expected[j] > 0.0)) throw Error(ErrorCode::kInvalidParameter, "expected bin count must be > 0");
    const double diff = static_cast<double>(observed[j]) - expected[j];
    stat += diff * diff / expected[j];
  }
  const std::size_t dof = observed.size() - 1;
  const boost::math::chi_squared dist(static_cast<double>(dof));
  const double p_value = boost::math::cdf(boost::math::complement(dist, stat));
  return {stat, dof, p_value, std::move(observed), std::move(expected)};
}

std::string_view sequence_name(SequenceKind kind) {
  switch (kind) {
    case SequenceKind::kArrivals: return "A";
    case SequenceKind::kServices: return "S";
    case SequenceKind::kDepartures: return "D";
    case SequenceKind::kBackOfQueue: return "R";
    case SequenceKind::kServiceStarts: return "B";
  }
  return "?";
}

namespace {

double block_sum(SequenceKind kind, const Trace& t, std::size_t n) {
  const auto sum = [n](const std::vector<double>& v) { return std::accumulate(v.begin(), v.begin() + n, 0.0); };
  switch (kind) {
    case SequenceKind::kArrivals: return sum(t.a);
    case SequenceKind::kServices: return sum(t.s);
    case SequenceKind::kDepartures: return sum(t.d);
    case SequenceKind::kBackOfQueue: return sum(t.r);
    case SequenceKind::kServiceStarts: return sum(t.b);
  }
  return 0.0;
}

// Half-width of the symmetric theta window allowed by the CGF domains that
// the chosen sequence depends on.
double domain_gap(SequenceKind kind, const DistributionSpec& arrivals, const DistributionSpec& services) {
  auto gap_of = [](const DistributionSpec& spec) {
    const Interval dom = cgf_domain(spec);
    return std::min(dom.hi, -dom.lo);
  };
  switch (kind) {
    case SequenceKind::kArrivals: return gap_of(arrivals);
    case SequenceKind::kServices: return gap_of(services);
    default: return std::min(gap_of(arrivals), gap_of(services));
  }
}

double log_mean_exp(std::span<const double> values, double theta) {
  double peak = -kInf;
  for (double v : values) peak = std::max(peak, theta * v);
  double acc = 0.0;
  for (double v : values) acc += std::exp(theta * v - peak);
  return peak + std::log(acc / static_cast<double>(values.size()));
}

}  // namespace

EmpiricalRate empirical_rate(SequenceKind kind, const DistributionSpec& arrivals,
                             const DistributionSpec& services, std::size_t n_block, std::size_t replications,
                             std::span<const double> x_grid, std::uint64_t seed, std::size_t burn_in,
                             unsigned threads) {
  require_stable(arrivals, services);
  if (n_block < 1000) throw Error(ErrorCode::kInvalidParameter, "n_block must be >= 1000");
  if (replications < 1000) throw Error(ErrorCode::kInvalidParameter, "replications must be >= 1000");

  const CounterRng root(seed);
  std::vector<double> sums(replications);
  parallel_for(replications, threads, [&](std::size_t i) {
    const CounterRng stream = root.split(i);
    TraceOptions options;
    options.w_init = loynes_stationary_workload(arrivals, services, burn_in, stream.split(0));
    CounterRng block_rng = stream.split(1);
    // One extra customer so that the departure gap d[n_block - 1] exists.
    const Trace t = simulate_trace(arrivals, services, n_block + 1, block_rng, options);
    sums[i] = block_sum(kind, t, n_block);
  });

  EmpiricalRate est;
  est.kind = kind;
  est.n_block = n_block;
  est.replications = replications;
  est.burn_in = burn_in;
  est.seed = seed;
  est.x_grid.assign(x_grid.begin(), x_grid.end());

  const double total = static_cast<double>(replications);
  const double sum_mean = std::accumulate(sums.begin(), sums.end(), 0.0) / total;
  double sq = 0.0;
  for (double v : sums) sq += (v - sum_mean) * (v - sum_mean);
  est.block_mean = sum_mean / static_cast<double>(n_block);
  est.block_sum_std = std::sqrt(sq / (total - 1.0));

  const double gap_limit = 0.8 * domain_gap(kind, arrivals, services);
  const double spread_limit = est.block_sum_std > 0.0 ? 2.0 / est.block_sum_std : 10.0;
  est.theta_max = std::min(gap_limit, spread_limit);

  constexpr int kHalfPoints = 10;
  const double n = static_cast<double>(n_block);
  for (;;) {
    est.theta_grid.clear();
    est.scaled_cgf.clear();
    bool finite = true;
    for (int j = -kHalfPoints; j <= kHalfPoints; ++j) {
      const double theta = est.theta_max * static_cast<double>(j) / kHalfPoints;
      const double value = j == 0 ? 0.0 : log_mean_exp(sums, theta) / n;
      finite = finite && std::isfinite(value);
      est.theta_grid.push_back(theta);
      est.scaled_cgf.push_back(value);
    }
    if (finite) break;
    est.theta_range_shrunk = true;
    est.theta_max *= 0.5;
  }

  for (std::size_t j = 1; j + 1 < est.scaled_cgf.size(); ++j) {
    const double chord = 0.5 * (est.scaled_cgf[j - 1] + est.scaled_cgf[j + 1]);
    if (est.scaled_cgf[j] > chord + 1e-12) ++est.convexity_violations;
  }

  est.rate_values.reserve(x_grid.size());
  for (double x : x_grid) {
    double best = 0.0;
    for (std::size_t j = 0; j < est.theta_grid.size(); ++j) {
      best = std::max(best, est.theta_grid[j] * x - est.scaled_cgf[j]);
    }
    est.rate_values.push_back(best);
  }
  return est;
}

FixedPointReport fixed_point_report(const DistributionSpec& arrivals, const DistributionSpec& services,
                                    const FixedPointConfig& config) {
  FixedPointReport rep;
  rep.tolerance = config.tolerance;
  rep.delta = delta_by_root(arrivals, services).delta;
  try {
    rep.tilt_distance = std::isfinite(rep.delta) ? parameter_distance(tilt(services, rep.delta), arrivals) : kInf;
  } catch (const Error&) {
    rep.tilt_distance = kInf;
  }
  rep.is_tilted = rep.tilt_distance <= config.tilt_tolerance;

  // Distinct stream families for the two outputs.
  rep.departures = empirical_rate(SequenceKind::kDepartures, arrivals, services, config.n_block,
                                  config.replications, config.x_grid_departures, config.seed, config.burn_in,
                                  config.threads);
  rep.back_of_queue = empirical_rate(SequenceKind::kBackOfQueue, arrivals, services, config.n_block,
                                     config.replications, config.x_grid_back_of_queue, config.seed ^ 0x5EEDULL,
                                     config.burn_in, config.threads);

  const RateFunction rate_a(arrivals);
  const RateFunction rate_s(services);
  auto compare = [](const std::vector<double>& grid, const std::vector<double>& empirical, const RateFunction& rf,
                    std::vector<double>& analytic) {
    double worst = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      analytic.push_back(rf(grid[j]));
      worst = std::max(worst, std::abs(empirical[j] - analytic.back()));
    }
    return worst;
  };
  rep.max_deviation_departures =
      compare(config.x_grid_departures, rep.departures.rate_values, rate_a, rep.analytic_arrival_rate);
  rep.max_deviation_back_of_queue =
      compare(config.x_grid_back_of_queue, rep.back_of_queue.rate_values, rate_s, rep.analytic_service_rate);
  rep.within_tolerance =
      rep.max_deviation_departures <= config.tolerance && rep.max_deviation_back_of_queue <= config.tolerance;
  rep.matches_expectation = rep.is_tilted ? rep.within_tolerance : !rep.within_tolerance;
  return rep;
}

}  // namespace qsld
