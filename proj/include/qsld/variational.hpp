#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "qsld/dist_models.hpp"
#include "qsld/ratefn.hpp"

namespace qsld {

// Rate functions of the inputs together with their tail exponent delta;
// everything the joint rate function J(x1, x2, w) of the scaled
// (departures, back-of-queue, workload) triple depends on.
class VariationalProblem {
 public:
  VariationalProblem(const DistributionSpec& arrivals, const DistributionSpec& services);
  VariationalProblem(const DistributionSpec& arrivals, const DistributionSpec& services, double delta);

  const RateFunction& rate_a() const noexcept { return rate_a_; }
  const RateFunction& rate_s() const noexcept { return rate_s_; }
  double delta() const noexcept { return delta_; }

 private:
  RateFunction rate_a_;
  RateFunction rate_s_;
  double delta_;
};

enum class Branch { kSingleBusyPeriod, kTwoPhase };

// Split point of a two-phase path: workload q left over at the split,
// split time tau, and the phase-two arrival / service increments v1, v2.
struct TwoPhasePoint {
  double q;
  double tau;
  double v1;
  double v2;
};

struct VariationalSolution {
  double value;
  Branch branch;
  // For kSingleBusyPeriod only `q = w - x1 + x2` is meaningful.
  TwoPhasePoint witness;
  double feasibility_residual;
  double single_busy_period_value;
  double two_phase_value;
  // Side inequalities of the reduction, recorded at the witness. They are
  // diagnostics only; the search enforces nothing beyond q >= 0, tau in
  // [0, 1] and the affine constraint.
  bool phase_one_order_holds;   // y1 >= y2
  bool phase_two_bound_holds;   // q + (1 - tau) z2 <= (1 - tau) z1, i.e. v2 <= v1
  std::size_t evaluations;
};

// Unbroken busy period: delta (w - x1 + x2) + I_A(x2) + I_S(x1), with the
// argument order exactly as in the rate formula; +inf when w - x1 + x2 < 0.
double branch1_value(const VariationalProblem& problem, double x1, double x2, double w);

struct TwoPhaseValue {
  double value;
  bool constraint_violated;
};

// tau I_AS((x2-v2)/tau, (x2-v2+w)/tau) + (1-tau) I_AS(v1/(1-tau), (v2-q)/(1-tau)) + delta q.
// A phase of zero length contributes 0 if both its numerators vanish and
// +inf otherwise. Throws kInvalidParameter for q < 0 or tau outside [0, 1];
// a point off the affine constraint x2 - v2 + w = x1 - v1 + q evaluates to
// +inf with constraint_violated set.
TwoPhaseValue g_eval(const VariationalProblem& problem, double x1, double x2, double w, const TwoPhasePoint& p);

struct MinimizeOptions {
  std::size_t grid_points = 30;
  double min_step = 1e-7;
};

// J(x1, x2, w) as the smaller of the single-busy-period value and the
// minimum of g over the constraint set (v1 eliminated; coarse grid over
// (q, tau, v2) followed by compass refinement). Point-mass inputs pin their
// phase arguments, leaving tau as the only free variable.
VariationalSolution minimize_J(const VariationalProblem& problem, double x1, double x2, double w,
                               const MinimizeOptions& options = {});

// Minimum of g over a dense (q, tau, v2) grid with v1 from the constraint.
// Oracle for minimize_J; shares only g_eval with it.
double brute_force_two_phase_min(const VariationalProblem& problem, double x1, double x2, double w,
                                 std::size_t points_per_axis);

struct GapEntry {
  double x1;
  double x2;
  double w;
  double solver;
  double closed_form;  // delta w + I_A(x1) + I_S(x2)
};

struct FixedPointGap {
  double max_gap = 0.0;
  std::vector<GapEntry> entries;
};

// Throws kNotTilted unless arrivals = tilt(services, delta) to 1e-9.
FixedPointGap fixed_point_gap(const DistributionSpec& arrivals, const DistributionSpec& services,
                              std::span<const std::array<double, 3>> triples, const MinimizeOptions& options = {});

struct CorollaryLevel {
  double q;
  double inf_value;  // inf over (x1, x2) of J(x1, x2, q)
  double target;     // delta q
  double gap;
  double x1;         // minimizer
  double x2;
};

struct CorollaryCheck {
  double delta = 0.0;
  double max_gap = 0.0;
  std::vector<CorollaryLevel> levels;
};

// inf over (x1, x2) of J(x1, x2, q) against delta q for each level.
// Throws kUnstableInputs.
CorollaryCheck corollary_workload_consistency(const DistributionSpec& arrivals, const DistributionSpec& services,
                                              std::span<const double> q_grid);

}  // namespace qsld
