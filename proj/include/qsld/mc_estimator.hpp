#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "qsld/dist_models.hpp"

namespace qsld {

// Stationary workload draws; replication i uses CounterRng(seed).split(i).
std::vector<double> sample_stationary_workloads(const DistributionSpec& arrivals,
                                                const DistributionSpec& services, std::size_t replications,
                                                std::size_t burn_in, std::uint64_t seed, unsigned threads = 0);

struct TailLevel {
  double q;
  std::size_t exceedances;
  double prob;        // empirical P(w >= q)
  double prob_stderr; // binomial standard error
  double log_prob;
  bool used_in_fit;   // false when fewer than kMinExceedances were seen
};

struct TailEstimate {
  std::vector<TailLevel> levels;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double delta_hat = 0.0;  // -slope
  std::size_t replications = 0;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
  bool insufficient_tail = false;  // some level was dropped from the fit
  bool monotone = true;            // log_prob nonincreasing in q
};

inline constexpr std::size_t kMinExceedances = 30;

// Exceedance frequencies of `samples` at q_grid and a weighted least-squares
// line through (q, log P); weights are the inverse binomial variances of the
// log-frequencies. Throws kInsufficientTail if fewer than two levels remain.
TailEstimate fit_tail(std::span<const double> samples, std::span<const double> q_grid);

// Draws stationary workloads and fits the tail. Requires stability, a strictly
// increasing positive q_grid, and at least 1e4 replications.
TailEstimate estimate_tail_slope(const DistributionSpec& arrivals, const DistributionSpec& services,
                                 std::span<const double> q_grid, std::size_t replications, std::size_t burn_in,
                                 std::uint64_t seed, unsigned threads = 0);

struct BurnInCheck {
  std::vector<double> shift_in_stderr;  // per level, |P(2B) - P(B)| / stderr(P(B))
  double max_shift_in_stderr = 0.0;
  bool passes = false;                  // max shift <= 1
};

// Re-estimates the exceedance curve with twice the burn-in on the same
// streams; with backward coupling the two runs differ only when the
// stationary sup is reached further back than `burn_in`.
BurnInCheck burn_in_self_test(const DistributionSpec& arrivals, const DistributionSpec& services,
                              std::span<const double> q_grid, std::size_t replications, std::size_t burn_in,
                              std::uint64_t seed, unsigned threads = 0);

struct ChiSquareResult {
  double statistic;
  std::size_t dof;
  double p_value;
  std::vector<std::size_t> observed;
  std::vector<double> expected;
};

// Pearson goodness-of-fit of samples against a survival function
// P(w >= q) on bins [levels[j], levels[j+1]) plus [levels.back(), inf).
// levels must start at the lower support end (survival 1).
template <class Survival>
ChiSquareResult chi_square_against_survival(std::span<const double> samples, std::span<const double> levels,
                                            Survival&& survival);

ChiSquareResult chi_square_from_counts(std::vector<std::size_t> observed, std::vector<double> expected);

enum class SequenceKind { kArrivals, kServices, kDepartures, kBackOfQueue, kServiceStarts };

std::string_view sequence_name(SequenceKind kind);

struct EmpiricalRate {
  SequenceKind kind;
  std::vector<double> x_grid;
  std::vector<double> rate_values;   // empirical Legendre transform on x_grid
  std::vector<double> theta_grid;    // 21 points in [-theta_max, theta_max]
  std::vector<double> scaled_cgf;    // (1/n) log mean exp(theta * block sum)
  std::size_t n_block = 0;
  std::size_t replications = 0;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
  double block_mean = 0.0;           // mean of block sums / n_block
  double block_sum_std = 0.0;        // standard deviation of block sums
  double theta_max = 0.0;
  bool theta_range_shrunk = false;   // CgfOverflow: range halved until finite
  std::size_t convexity_violations = 0;
};

// Scaled-CGF estimate of the rate function of (1/n) * (block sum of the
// chosen sequence) from stationary-start traces, Legendre-transformed onto
// x_grid. Requires n_block >= 1000 and replications >= 1000.
EmpiricalRate empirical_rate(SequenceKind kind, const DistributionSpec& arrivals,
                             const DistributionSpec& services, std::size_t n_block, std::size_t replications,
                             std::span<const double> x_grid, std::uint64_t seed, std::size_t burn_in = 1000,
                             unsigned threads = 0);

struct FixedPointConfig {
  std::size_t n_block = 1000;
  std::size_t replications = 4000;
  std::size_t burn_in = 1000;
  std::vector<double> x_grid_departures;
  std::vector<double> x_grid_back_of_queue;
  double tolerance = 0.05;
  double tilt_tolerance = 1e-9;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

struct FixedPointReport {
  double delta = 0.0;
  double tilt_distance = 0.0;     // |params(tilt(S, delta)) - params(A)|
  bool is_tilted = false;         // false: NotTilted, report is a negative control
  EmpiricalRate departures;
  EmpiricalRate back_of_queue;
  std::vector<double> analytic_arrival_rate;   // I_A on x_grid_departures
  std::vector<double> analytic_service_rate;   // I_S on x_grid_back_of_queue
  double max_deviation_departures = 0.0;
  double max_deviation_back_of_queue = 0.0;
  double tolerance = 0.0;
  bool within_tolerance = false;
  // Tilted pairs are expected to fall within tolerance, negative controls
  // to exceed it.
  bool matches_expectation = false;
};

FixedPointReport fixed_point_report(const DistributionSpec& arrivals, const DistributionSpec& services,
                                    const FixedPointConfig& config);

// ---------------------------------------------------------------------------

template <class Survival>
ChiSquareResult chi_square_against_survival(std::span<const double> samples, std::span<const double> levels,
                                            Survival&& survival) {
  std::vector<std::size_t> observed(levels.size(), 0);
  for (double w : samples) {
    std::size_t bin = 0;
    while (bin + 1 < levels.size() && w >= levels[bin + 1]) ++bin;
    ++observed[bin];
  }
  std::vector<double> expected(levels.size());
  const double total = static_cast<double>(samples.size());
  for (std::size_t j = 0; j < levels.size(); ++j) {
    const double upper = j + 1 < levels.size() ? survival(levels[j + 1]) : 0.0;
    expected[j] = total * (survival(levels[j]) - upper);
  }
  return chi_square_from_counts(std::move(observed), std::move(expected));
}

}  // namespace qsld
