#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace qsld {

struct ScalarOptimum {
  double x;
  double value;
  double lo;  // final bracket
  double hi;
};

// Golden-section search for the maximum of a concave (or unimodal) function
// on [lo, hi]. Stops when the bracket is narrower than x_tol * (1 + |x|).
template <class F>
ScalarOptimum golden_section_max(F&& f, double lo, double hi, double x_tol, int max_iter = 200) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < max_iter && (b - a) > x_tol * (1.0 + std::abs(c)); ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  // Endpoints are never evaluated by the interior iteration; include them so
  // a maximum sitting on the boundary is reported exactly.
  ScalarOptimum best{c, fc, a, b};
  if (fd > best.value) best = {d, fd, a, b};
  for (double x : {lo, hi}) {
    const double fx = f(x);
    if (fx > best.value) best = {x, fx, a, b};
  }
  return best;
}

// Bisection for a sign change of f on [lo, hi]; f(lo) and f(hi) must have
// opposite signs (zero counts as either). Returns the midpoint of the final
// bracket.
template <class F>
double bisect_root(F&& f, double lo, double hi, double x_tol, int max_iter = 400) {
  double flo = f(lo);
  for (int it = 0; it < max_iter && (hi - lo) > x_tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if ((fm <= 0.0) == (flo <= 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct BoxMinimum {
  std::vector<double> x;
  double value;
  std::size_t evaluations;
};

// Compass (coordinate pattern) search inside the box [lower, upper],
// starting from `start` with per-coordinate initial steps. Steps halve on
// failure until all fall below min_step. f may return +inf.
template <class F>
BoxMinimum compass_minimize(F&& f, std::vector<double> start, std::span<const double> lower,
                            std::span<const double> upper, std::vector<double> steps, double min_step,
                            std::size_t max_evaluations = 200000) {
  const std::size_t dim = start.size();
  BoxMinimum best{std::move(start), 0.0, 1};
  best.value = f(std::span<const double>(best.x));
  std::vector<double> trial(dim);
  auto too_small = [&] {
    return std::all_of(steps.begin(), steps.end(), [&](double s) { return s < min_step; });
  };
  while (!too_small() && best.evaluations < max_evaluations) {
    bool improved = false;
    for (std::size_t i = 0; i < dim; ++i) {
      if (steps[i] < min_step) continue;
      for (double sign : {1.0, -1.0}) {
        trial = best.x;
        trial[i] = std::clamp(best.x[i] + sign * steps[i], lower[i], upper[i]);
        if (trial[i] == best.x[i]) continue;
        const double v = f(std::span<const double>(trial));
        ++best.evaluations;
        if (v < best.value) {
          best.value = v;
          best.x = trial;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      for (double& s : steps) s *= 0.5;
    }
  }
  return best;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  out.back() = hi;
  return out;
}

inline std::vector<double> logspace(double lo, double hi, std::size_t count) {
  std::vector<double> out = linspace(std::log(lo), std::log(hi), count);
  for (double& v : out) v = std::exp(v);
  if (count > 0) {
    out.front() = lo;
    out.back() = hi;
  }
  return out;
}

}  // namespace qsld
