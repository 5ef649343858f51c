#include "qsld/ratefn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qsld/error.hpp"
#include "qsld/scalar_search.hpp"

namespace qsld {
namespace {

constexpr double kBoundaryGap = 1e-9;
constexpr double kGrowthLimit = 1e6;
constexpr double kHullTol = 1e-12;

double inside_upper(double hi) { return std::isfinite(hi) ? hi - kBoundaryGap * std::max(1.0, std::abs(hi)) : kInf; }
double inside_lower(double lo) { return std::isfinite(lo) ? lo + kBoundaryGap * std::max(1.0, std::abs(lo)) : -kInf; }

}  // namespace

RateFunction::RateFunction(DistributionSpec spec)
    : spec_(std::move(spec)), mean_(qsld::mean(spec_)), domain_(cgf_domain(spec_)), hull_(support_hull(spec_)) {}

LegendreResult RateFunction::evaluate(double x) const {
  if (std::isnan(x)) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  const double slack = kHullTol * std::max(1.0, std::abs(x));
  if (x < hull_.lo - slack) return {kInf, -kInf};
  if (x > hull_.hi + slack) return {kInf, kInf};
  if (spec_.is_degenerate() || x == mean_) return {0.0, 0.0};

  auto objective = [&](double theta) { return theta * x - cgf(spec_, theta); };
  // Direction of the maximizer: +1 above the mean, -1 below.
  const double dir = x > mean_ ? 1.0 : -1.0;
  const double edge = dir > 0 ? inside_upper(domain_.hi) : -inside_lower(domain_.lo);
  auto slope_beyond = [&](double t) {  // true while the maximizer lies past dir*t
    return dir > 0 ? cgf_derivative(spec_, t) < x : cgf_derivative(spec_, -t) > x;
  };

  double inner = 0.0;
  double outer = std::min(1.0, edge);
  while (outer < edge && slope_beyond(outer)) {
    if (outer >= kGrowthLimit) {
      // Still ascending after a million units of theta: either x is on the
      // hull boundary (sup converges) or the sup diverges.
      const double gain = objective(dir * outer) - objective(dir * outer * 0.5);
      if (gain > 1e-9) return {kInf, dir * outer};
      return {std::max(objective(dir * outer), 0.0), dir * outer};
    }
    inner = outer;
    outer = std::min(2.0 * outer, edge);
  }

  const double lo = dir > 0 ? inner : -outer;
  const double hi = dir > 0 ? outer : -inner;
  const ScalarOptimum golden = golden_section_max(objective, lo, hi, 1e-7);

  // Polish cgf'(theta) = x on the final golden bracket.
  double a = golden.lo;
  double b = golden.hi;
  double fa = x - cgf_derivative(spec_, a);
  double fb = x - cgf_derivative(spec_, b);
  double theta = golden.x;
  if (fa > 0.0 && fb < 0.0 && std::isfinite(fa) && std::isfinite(fb)) {
    int side = 0;
    for (int it = 0; it < 60; ++it) {
      theta = (a * fb - b * fa) / (fb - fa);
      const double ft = x - cgf_derivative(spec_, theta);
      if (ft == 0.0 || (b - a) < 1e-15 * (1.0 + std::abs(theta))) break;
      if (ft > 0.0) {
        a = theta;
        fa = ft;
        if (side == 1) fb *= 0.5;
        side = 1;
      } else {
        b = theta;
        fb = ft;
        if (side == -1) fa *= 0.5;
        side = -1;
      }
    }
  }
  double value = objective(theta);
  if (!(value >= golden.value)) {
    value = golden.value;
    theta = golden.x;
  }
  return {std::max(value, 0.0), theta};
}

double legendre_eval(const RateFunction& rf, double x) { return rf(x); }

double joint_rate(const RateFunction& rf_a, const RateFunction& rf_s, double a, double s) {
  const double ia = rf_a(a);
  if (ia == kInf) return kInf;
  const double is = rf_s(s);
  if (is == kInf) return kInf;
  return ia + is;
}

void require_stable(const DistributionSpec& arrivals, const DistributionSpec& services) {
  if (!(mean(services) < mean(arrivals))) {
    throw Error(ErrorCode::kUnstableInputs, "mean service " + std::to_string(mean(services)) +
                                                " must be below mean interarrival " +
                                                std::to_string(mean(arrivals)));
  }
}

DeltaResult delta_by_root(const DistributionSpec& arrivals, const DistributionSpec& services) {
  require_stable(arrivals, services);
  auto g = [&](double theta) { return cgf(services, theta) + cgf(arrivals, -theta); };

  const double upper = std::min(cgf_domain(services).hi, -cgf_domain(arrivals).lo);
  const double edge = inside_upper(upper);
  const double limit = std::isfinite(edge) ? edge : kGrowthLimit;

  double lo = 0.0;
  double hi = std::min(1e-3, limit);
  while (g(hi) <= 0.0) {
    if (hi >= limit) {
      // G never turns positive: the sup is the domain edge itself.
      return {upper, upper, std::numeric_limits<double>::quiet_NaN(), true};
    }
    lo = hi;
    hi = std::min(2.0 * hi, limit);
  }
  const double root = bisect_root(g, lo, hi, 1e-12);
  return {root, root, std::numeric_limits<double>::quiet_NaN(), false};
}

namespace {

// Grid used by the inf-ratio oracle: log-spaced offsets above the lower
// hull end; unbounded hulls are cut at mean + 30 sd.
std::vector<double> ratio_grid(const DistributionSpec& spec, std::size_t count) {
  const SupportHull hull = support_hull(spec);
  if (spec.is_degenerate()) return {hull.lo};
  const double hi = std::isfinite(hull.hi) ? hull.hi : mean(spec) + 30.0 * std::sqrt(variance(spec));
  const double width = hi - hull.lo;
  std::vector<double> grid = logspace(1e-5, 1.0, count);
  for (double& g : grid) g = hull.lo + width * g;
  return grid;
}

}  // namespace

double delta_by_inf(const DistributionSpec& arrivals, const DistributionSpec& services) {
  require_stable(arrivals, services);
  const RateFunction rf_a(arrivals);
  const RateFunction rf_s(services);
  constexpr std::size_t kGrid = 200;

  const std::vector<double> a_grid = ratio_grid(arrivals, kGrid);
  const std::vector<double> s_grid = ratio_grid(services, kGrid);
  std::vector<double> ia(a_grid.size());
  std::vector<double> is(s_grid.size());
  for (std::size_t i = 0; i < a_grid.size(); ++i) ia[i] = rf_a(a_grid[i]);
  for (std::size_t j = 0; j < s_grid.size(); ++j) is[j] = rf_s(s_grid[j]);

  auto ratio = [&](double a, double s, double rate_sum) {
    if (!(a > 0.0) || !(s > a) || rate_sum == kInf) return kInf;
    return rate_sum / (s - a);
  };

  double best = kInf;
  std::size_t bi = 0;
  std::size_t bj = 0;
  for (std::size_t i = 0; i < a_grid.size(); ++i) {
    for (std::size_t j = 0; j < s_grid.size(); ++j) {
      const double r = ratio(a_grid[i], s_grid[j], ia[i] == kInf || is[j] == kInf ? kInf : ia[i] + is[j]);
      if (r < best) {
        best = r;
        bi = i;
        bj = j;
      }
    }
  }
  if (best == kInf) return kInf;

  auto spacing = [](const std::vector<double>& g, std::size_t k) {
    if (g.size() < 2) return 0.0;
    const std::size_t left = k == 0 ? 0 : k - 1;
    const std::size_t right = std::min(k + 1, g.size() - 1);
    return 0.5 * (g[right] - g[left]);
  };
  const std::vector<double> lower{a_grid.front(), s_grid.front()};
  const std::vector<double> upper{a_grid.back(), s_grid.back()};
  const double scale = std::max(mean(arrivals), mean(services));
  const BoxMinimum refined = compass_minimize(
      [&](std::span<const double> p) { return ratio(p[0], p[1], joint_rate(rf_a, rf_s, p[0], p[1])); },
      {a_grid[bi], s_grid[bj]}, lower, upper, {spacing(a_grid, bi), spacing(s_grid, bj)}, 1e-11 * scale);
  return std::min(best, refined.value);
}

DeltaResult cross_checked_delta(const DistributionSpec& arrivals, const DistributionSpec& services) {
  DeltaResult result = delta_by_root(arrivals, services);
  const double oracle = delta_by_inf(arrivals, services);
  result.method_agreement =
      (result.delta == kInf && oracle == kInf) ? 0.0 : std::abs(result.delta - oracle);
  return result;
}

double workload_rate(const DeltaResult& delta, double q) {
  if (!(q >= 0.0)) throw Error(ErrorCode::kInvalidParameter, "workload level must be >= 0");
  if (q == 0.0) return 0.0;
  return delta.delta * q;
}

}  // namespace qsld
