#include "qsld/variational.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "qsld/error.hpp"
#include "qsld/scalar_search.hpp"

namespace qsld {
namespace {

constexpr double kConstraintTol = 1e-8;
constexpr double kVanishTol = 1e-12;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double point_value(const DistributionSpec& spec) { return std::get<Deterministic>(spec.law()).value; }

// delta * q with 0 * inf = 0.
double workload_cost(double delta, double q) { return q == 0.0 ? 0.0 : delta * q; }

// weight * (I_A(na / weight) + I_S(ns / weight)), perspective limit at weight 0.
double phase_cost(const VariationalProblem& p, double weight, double na, double ns) {
  if (weight <= 0.0) {
    const double scale = kVanishTol * std::max({1.0, std::abs(na), std::abs(ns)});
    return (std::abs(na) <= scale && std::abs(ns) <= scale) ? 0.0 : kInf;
  }
  const double ia = p.rate_a()(na / weight);
  if (!std::isfinite(ia)) return kInf;
  const double is = p.rate_s()(ns / weight);
  if (!std::isfinite(is)) return kInf;
  return weight * (ia + is);
}

struct Point {
  double x1, x2, q, tau, v2;
};

double v1_from_constraint(double x1, double x2, double w, double q, double v2) { return x1 - x2 + v2 - w + q; }

// Objective on a point already on the constraint set; +inf outside q >= 0, tau in [0, 1].
double g_on_constraint(const VariationalProblem& p, const Point& z, double w) {
  if (!(z.q >= 0.0) || !(z.tau >= 0.0) || !(z.tau <= 1.0)) return kInf;
  const double v1 = v1_from_constraint(z.x1, z.x2, w, z.q, z.v2);
  const double first = phase_cost(p, z.tau, z.x2 - z.v2, z.x2 - z.v2 + w);
  if (!std::isfinite(first)) return kInf;
  const double second = phase_cost(p, 1.0 - z.tau, v1, z.v2 - z.q);
  if (!std::isfinite(second)) return kInf;
  return first + second + workload_cost(p.delta(), z.q);
}

// Maps free coordinates to a point of the constraint set. Point-mass inputs
// pin their phase arguments: with A = a0 both A arguments equal a0, which
// fixes v2 and q given tau (likewise for S = s0).
struct Parametrization {
  bool free_x;          // x1, x2 are leading coordinates
  double x1 = 0.0;      // used when !free_x
  double x2 = 0.0;
  double w = 0.0;
  std::optional<double> a0;
  std::optional<double> s0;

  std::size_t tail_dims() const { return (a0 || s0) ? 1 : 3; }

  Point decode(std::span<const double> z) const {
    std::size_t k = 0;
    Point pt{};
    pt.x1 = free_x ? z[k++] : x1;
    pt.x2 = free_x ? z[k++] : x2;
    if (a0) {
      pt.tau = z[k];
      pt.v2 = pt.x2 - *a0 * pt.tau;
      pt.q = *a0 - pt.x1 + w;
    } else if (s0) {
      pt.tau = z[k];
      pt.v2 = pt.x2 + w - *s0 * pt.tau;
      pt.q = pt.x2 + w - *s0;
    } else {
      pt.q = z[k] * (w + pt.x2);
      pt.tau = z[k + 1];
      pt.v2 = z[k + 2] * pt.x2;
    }
    return pt;
  }
};

struct SearchResult {
  std::vector<double> z;
  double value = kInf;
  std::size_t evaluations = 0;
};

// Tensor grid over the box, then compass refinement from the best few grid
// points with the grid spacing as initial step.
SearchResult grid_then_compass(const std::function<double(std::span<const double>)>& f,
                               const std::vector<double>& lower, const std::vector<double>& upper,
                               const std::vector<std::size_t>& counts, double min_step,
                               const std::vector<std::vector<double>>& extra_starts = {}) {
  const std::size_t dim = lower.size();
  std::vector<std::vector<double>> axes(dim);
  std::size_t total = 1;
  for (std::size_t i = 0; i < dim; ++i) {
    axes[i] = linspace(lower[i], upper[i], counts[i]);
    total *= counts[i];
  }

  constexpr std::size_t kStarts = 3;
  std::vector<std::pair<double, std::vector<double>>> best;
  auto offer = [&](double v, const std::vector<double>& z) {
    if (!std::isfinite(v)) return;
    if (best.size() < kStarts || v < best.back().first) {
      best.emplace_back(v, z);
      std::stable_sort(best.begin(), best.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      if (best.size() > kStarts) best.pop_back();
    }
  };

  SearchResult out;
  std::vector<double> z(dim);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t r = flat;
    for (std::size_t i = dim; i-- > 0;) {
      z[i] = axes[i][r % counts[i]];
      r /= counts[i];
    }
    offer(f(z), z);
  }
  out.evaluations = total;
  for (const auto& s : extra_starts) {
    offer(f(s), s);
    ++out.evaluations;
  }
  if (best.empty()) return out;

  std::vector<double> steps(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    steps[i] = counts[i] > 1 ? (upper[i] - lower[i]) / static_cast<double>(counts[i] - 1) : 0.0;
  }
  for (const auto& [v, start] : best) {
    BoxMinimum m = compass_minimize(f, start, lower, upper, steps, min_step);
    out.evaluations += m.evaluations;
    if (m.value < out.value) {
      out.value = m.value;
      out.z = std::move(m.x);
    }
  }
  return out;
}

void tail_box(const Parametrization& par, std::size_t grid, std::vector<double>& lower, std::vector<double>& upper,
              std::vector<std::size_t>& counts) {
  for (std::size_t i = 0; i < par.tail_dims(); ++i) {
    lower.push_back(0.0);
    upper.push_back(1.0);
    counts.push_back(grid);
  }
}

// Pinned searches: tau values where an argument of the free law reaches an
// end of its support hull (the pinned point mass's own tau, if both laws are
// point masses). Feasible sets can shrink to one of these points.
std::vector<double> pinned_breakpoints(const Parametrization& par, const SupportHull& free_hull) {
  std::vector<double> out;
  auto keep = [&](double num, double den) {
    if (den == 0.0) return;
    const double tau = num / den;
    if (tau >= 0.0 && tau <= 1.0) out.push_back(tau);
  };
  const double w = par.w;
  for (double e : {free_hull.lo, free_hull.hi}) {
    if (!std::isfinite(e)) continue;
    if (par.a0) {
      // Service arguments a0 + w / tau and (x2 - a0 tau - q) / (1 - tau), q = a0 - x1 + w.
      const double q = *par.a0 - par.x1 + w;
      keep(w, e - *par.a0);
      keep(e - par.x2 + q, e - *par.a0);
    } else if (par.s0) {
      // Arrival arguments s0 - w / tau and (x1 + x2 + w - s0 - s0 tau) / (1 - tau).
      keep(w, *par.s0 - e);
      keep(e - par.x1 - par.x2 - w + *par.s0, e - *par.s0);
    }
  }
  if (par.a0 && par.s0) keep(w, *par.s0 - *par.a0);
  return out;
}

void check_w(double w) {
  if (!(w >= 0.0)) throw Error(ErrorCode::kInvalidParameter, "workload level w must be >= 0");
}

}  // namespace

VariationalProblem::VariationalProblem(const DistributionSpec& arrivals, const DistributionSpec& services)
    : VariationalProblem(arrivals, services, delta_by_root(arrivals, services).delta) {}

VariationalProblem::VariationalProblem(const DistributionSpec& arrivals, const DistributionSpec& services,
                                       double delta)
    : rate_a_(arrivals), rate_s_(services), delta_(delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::kInvalidParameter, "delta must be positive");
}

double branch1_value(const VariationalProblem& problem, double x1, double x2, double w) {
  check_w(w);
  const double q = w - x1 + x2;
  if (q < 0.0) return kInf;
  const double ia = problem.rate_a()(x2);
  const double is = problem.rate_s()(x1);
  if (!std::isfinite(ia) || !std::isfinite(is)) return kInf;
  return workload_cost(problem.delta(), q) + ia + is;
}

TwoPhaseValue g_eval(const VariationalProblem& problem, double x1, double x2, double w, const TwoPhasePoint& p) {
  check_w(w);
  if (!(p.q >= 0.0)) throw Error(ErrorCode::kInvalidParameter, "q must be >= 0");
  if (!(p.tau >= 0.0 && p.tau <= 1.0)) throw Error(ErrorCode::kInvalidParameter, "tau must lie in [0, 1]");
  const double residual = (x2 - p.v2 + w) - (x1 - p.v1 + p.q);
  const double scale = std::max({1.0, std::abs(x1), std::abs(x2), std::abs(w), std::abs(p.v1), std::abs(p.v2)});
  if (std::abs(residual) > kConstraintTol * scale) return {kInf, true};
  const double first = phase_cost(problem, p.tau, x2 - p.v2, x2 - p.v2 + w);
  const double second = phase_cost(problem, 1.0 - p.tau, p.v1, p.v2 - p.q);
  const double total = first + second + workload_cost(problem.delta(), p.q);
  return {std::isnan(total) ? kInf : total, false};
}

VariationalSolution minimize_J(const VariationalProblem& problem, double x1, double x2, double w,
                               const MinimizeOptions& options) {
  check_w(w);
  if (!(x1 > 0.0 && x2 > 0.0)) throw Error(ErrorCode::kInvalidParameter, "x1 and x2 must be positive");

  Parametrization par{false, x1, x2, w, std::nullopt, std::nullopt};
  if (problem.rate_a().spec().is_degenerate()) par.a0 = point_value(problem.rate_a().spec());
  else if (problem.rate_s().spec().is_degenerate()) par.s0 = point_value(problem.rate_s().spec());
  if (problem.rate_a().spec().is_degenerate() && problem.rate_s().spec().is_degenerate()) {
    par.s0 = point_value(problem.rate_s().spec());
  }

  auto f = [&](std::span<const double> z) { return g_on_constraint(problem, par.decode(z), w); };
  std::vector<double> lower, upper;
  std::vector<std::size_t> counts;
  tail_box(par, options.grid_points, lower, upper, counts);
  std::vector<std::vector<double>> extra;
  if (par.a0 || par.s0) {
    const SupportHull free_hull = support_hull(par.a0 ? problem.rate_s().spec() : problem.rate_a().spec());
    for (double tau : pinned_breakpoints(par, free_hull)) extra.push_back({tau});
  }
  const SearchResult two = grid_then_compass(f, lower, upper, counts, options.min_step, extra);

  VariationalSolution sol{};
  sol.single_busy_period_value = branch1_value(problem, x1, x2, w);
  sol.two_phase_value = two.value;
  sol.evaluations = two.evaluations + 1;

  if (sol.single_busy_period_value <= two.value) {
    sol.value = sol.single_busy_period_value;
    sol.branch = Branch::kSingleBusyPeriod;
    sol.witness = {w - x1 + x2, kNaN, kNaN, kNaN};
    sol.feasibility_residual = 0.0;
    sol.phase_one_order_holds = true;
    sol.phase_two_bound_holds = true;
    return sol;
  }

  const Point pt = par.decode(two.z);
  const double v1 = v1_from_constraint(x1, x2, w, pt.q, pt.v2);
  sol.value = two.value;
  sol.branch = Branch::kTwoPhase;
  sol.witness = {pt.q, pt.tau, v1, pt.v2};
  sol.feasibility_residual = std::abs((x2 - pt.v2 + w) - (x1 - v1 + pt.q));
  // y1 = (x2 - v2) / tau and y2 = (w + x2 - v2) / tau; compare numerators.
  sol.phase_one_order_holds = pt.tau == 0.0 || (x2 - pt.v2) >= (w + x2 - pt.v2);
  sol.phase_two_bound_holds = pt.v2 <= v1 + kConstraintTol;
  return sol;
}

double brute_force_two_phase_min(const VariationalProblem& problem, double x1, double x2, double w,
                                 std::size_t points_per_axis) {
  check_w(w);
  const std::vector<double> qs = linspace(0.0, w + x2, points_per_axis);
  const std::vector<double> taus = linspace(0.0, 1.0, points_per_axis);
  const std::vector<double> v2s = linspace(0.0, x2, points_per_axis);
  double best = kInf;
  for (double q : qs) {
    for (double tau : taus) {
      for (double v2 : v2s) {
        const TwoPhasePoint p{q, tau, x1 - x2 + v2 - w + q, v2};
        best = std::min(best, g_eval(problem, x1, x2, w, p).value);
      }
    }
  }
  return best;
}

FixedPointGap fixed_point_gap(const DistributionSpec& arrivals, const DistributionSpec& services,
                              std::span<const std::array<double, 3>> triples, const MinimizeOptions& options) {
  const DeltaResult d = delta_by_root(arrivals, services);
  if (!std::isfinite(d.delta) || parameter_distance(tilt(services, d.delta), arrivals) > 1e-9) {
    throw Error(ErrorCode::kNotTilted, "arrivals are not the delta-tilt of services");
  }
  const VariationalProblem problem(arrivals, services, d.delta);
  FixedPointGap out;
  for (const auto& [x1, x2, w] : triples) {
    const double solver = minimize_J(problem, x1, x2, w, options).value;
    const double closed = d.delta * w + problem.rate_a()(x1) + problem.rate_s()(x2);
    const double gap = (solver == closed) ? 0.0 : std::abs(solver - closed);
    out.entries.push_back({x1, x2, w, solver, closed});
    out.max_gap = std::max(out.max_gap, std::isnan(gap) ? kInf : gap);
  }
  return out;
}

CorollaryCheck corollary_workload_consistency(const DistributionSpec& arrivals, const DistributionSpec& services,
                                              std::span<const double> q_grid) {
  const DeltaResult d = delta_by_root(arrivals, services);
  if (!std::isfinite(d.delta)) throw Error(ErrorCode::kInvalidParameter, "delta is infinite; no workload tail");
  const VariationalProblem problem(arrivals, services, d.delta);

  // Box for (x1, x2): from the lower support edge to a few standard
  // deviations past the larger mean, clipped to the support hulls.
  const SupportHull ha = support_hull(arrivals);
  const SupportHull hs = support_hull(services);
  const double lo = std::max(0.0, std::min(ha.lo, hs.lo));
  double hi = 0.0;
  for (const auto* s : {&arrivals, &services}) {
    const SupportHull h = support_hull(*s);
    hi = std::max(hi, std::min(h.hi, mean(*s) + 4.0 * std::sqrt(variance(*s))));
  }
  hi = std::max(hi, 1.5 * std::max(mean(arrivals), mean(services)));

  const bool a_det = arrivals.is_degenerate();
  const bool s_det = services.is_degenerate();

  CorollaryCheck out;
  out.delta = d.delta;
  for (double w : q_grid) {
    check_w(w);

    // Single busy period over (x1, x2), with point masses pinned.
    auto b1 = [&](std::span<const double> z) {
      std::size_t k = 0;
      const double x1 = s_det ? point_value(services) : z[k++];
      const double x2 = a_det ? point_value(arrivals) : z[k++];
      return branch1_value(problem, x1, x2, w);
    };
    std::vector<double> lower, upper;
    std::vector<std::size_t> counts;
    const std::size_t b1_dims = (s_det ? 0 : 1) + (a_det ? 0 : 1);
    for (std::size_t i = 0; i < b1_dims; ++i) {
      lower.push_back(lo);
      upper.push_back(hi);
      counts.push_back(61);
    }
    SearchResult r1;
    if (b1_dims == 0) {
      r1.value = b1({});
    } else {
      r1 = grid_then_compass(b1, lower, upper, counts, 1e-9);
    }
    auto decode_b1 = [&](const std::vector<double>& z) {
      std::size_t k = 0;
      const double x1 = s_det ? point_value(services) : z.at(k++);
      const double x2 = a_det ? point_value(arrivals) : z.at(k++);
      return std::pair{x1, x2};
    };

    // Two-phase paths jointly over (x1, x2) and the split.
    Parametrization par{true, 0.0, 0.0, w, std::nullopt, std::nullopt};
    if (a_det) par.a0 = point_value(arrivals);
    if (s_det) par.s0 = point_value(services);
    auto g = [&](std::span<const double> z) { return g_on_constraint(problem, par.decode(z), w); };
    lower = {lo, lo};
    upper = {hi, hi};
    const std::size_t tail = par.tail_dims();
    const std::size_t x_points = tail == 1 ? 41 : 11;
    const std::size_t t_points = tail == 1 ? 41 : 9;
    counts = {x_points, x_points};
    tail_box(par, t_points, lower, upper, counts);
    std::vector<std::vector<double>> extra;
    if (par.a0 && par.s0 && *par.s0 != *par.a0) {
      // Both pins hold together only at tau = w / (s0 - a0).
      const double tau = w / (*par.s0 - *par.a0);
      if (tau >= 0.0 && tau <= 1.0) {
        for (double x1 : linspace(lo, hi, 41)) {
          for (double x2 : linspace(lo, hi, 41)) extra.push_back({x1, x2, tau});
        }
      }
    }
    const SearchResult r2 = grid_then_compass(g, lower, upper, counts, 1e-9, extra);

    CorollaryLevel level{};
    level.q = w;
    level.target = workload_cost(d.delta, w);
    if (!std::isfinite(r1.value) && !std::isfinite(r2.value)) {
      level.inf_value = kInf;
      level.x1 = level.x2 = kNaN;
    } else if (r1.value <= r2.value) {
      level.inf_value = r1.value;
      std::tie(level.x1, level.x2) = decode_b1(r1.z);
    } else {
      level.inf_value = r2.value;
      const Point pt = par.decode(r2.z);
      level.x1 = pt.x1;
      level.x2 = pt.x2;
    }
    level.gap = std::isfinite(level.inf_value) ? std::abs(level.inf_value - level.target) : kInf;
    out.max_gap = std::max(out.max_gap, level.gap);
    out.levels.push_back(level);
  }
  return out;
}

}  // namespace qsld
