#include "qsld/bandwidth.hpp"

#include <cmath>

#include "qsld/error.hpp"
#include "qsld/scalar_search.hpp"

namespace qsld {
namespace {

constexpr double kRootTol = 1e-13;

// Bracket [lo, hi] with hi the first point where h turns positive, growing
// from `start` towards `edge`. Returns false when h stays <= 0.
template <class H>
bool bracket_sign_change(H&& h, double start, double edge, double& lo, double& hi) {
  lo = 0.0;
  hi = std::min(start, edge);
  while (h(hi) <= 0.0) {
    if (hi >= edge || hi > 1e6) return false;
    lo = hi;
    hi = std::min(2.0 * hi, edge);  // the CGF is +inf on the domain edge
  }
  return true;
}

double curve_value(const DistributionSpec& spec, double theta) {
  if (theta == 0.0) return mean(spec);
  return cgf(spec, theta) / theta;
}

}  // namespace

QosTarget::QosTarget(double p, double q) : p_(p), q_(q), theta_p_(0.0) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::kInvalidParameter, "p must lie in (0, 1)");
  if (!(q > 0.0) || !std::isfinite(q)) throw Error(ErrorCode::kInvalidParameter, "q must be positive");
  theta_p_ = -std::log(p) / q;
}

double delta_of_deterministic_arrival(double a, const DistributionSpec& services) {
  if (!(a > mean(services))) throw Error(ErrorCode::kUnstableInputs, "constant arrival gap must exceed mean service");
  auto h = [&](double t) { return cgf(services, t) - a * t; };
  double lo = 0.0;
  double hi = 0.0;
  if (!bracket_sign_change(h, 1.0, cgf_domain(services).hi, lo, hi)) return kInf;
  return bisect_root(h, lo, hi, kRootTol);
}

double effective_bandwidth_queue(const QosTarget& target, const DistributionSpec& services) {
  if (!cgf_domain(services).contains(target.theta_p())) {
    throw Error(ErrorCode::kThetaOutOfDomain, "theta_p outside the service CGF domain");
  }
  return cgf(services, target.theta_p()) / target.theta_p();
}

double effective_bandwidth_queue_by_inf(const QosTarget& target, const DistributionSpec& services) {
  if (!cgf_domain(services).contains(target.theta_p())) {
    throw Error(ErrorCode::kThetaOutOfDomain, "theta_p outside the service CGF domain");
  }
  // delta(a) increases in a; find where it crosses theta_p.
  const double m = mean(services);
  double lo = m;
  double hi = std::max(2.0 * m, m + 1.0);
  auto reached = [&](double a) { return a > m && delta_of_deterministic_arrival(a, services) >= target.theta_p(); };
  while (!reached(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw Error(ErrorCode::kThetaOutOfDomain, "no bandwidth reaches theta_p");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (reached(mid) ? hi : lo) = mid;
  }
  return hi;
}

std::vector<BandwidthPoint> alpha_a_curve(const DistributionSpec& services, std::span<const double> thetas) {
  std::vector<BandwidthPoint> out;
  out.reserve(thetas.size());
  for (double t : thetas) out.push_back({t, curve_value(services, t)});
  return out;
}

double effective_bandwidth_store(const QosTarget& target, const DistributionSpec& arrivals) {
  if (!cgf_domain(arrivals).contains(target.theta_p())) {
    throw Error(ErrorCode::kThetaOutOfDomain, "theta_p outside the arrival CGF domain");
  }
  return cgf(arrivals, target.theta_p()) / target.theta_p();
}

double delta_of_deterministic_supply(double s, const DistributionSpec& arrivals) {
  if (!(s < mean(arrivals))) throw Error(ErrorCode::kUnstableInputs, "supply must be below the mean arrival");
  // cgf_A(-u) + s u is convex in u, zero at 0 and negative just after it.
  auto h = [&](double u) { return cgf(arrivals, -u) + s * u; };
  double lo = 0.0;
  double hi = 0.0;
  if (!bracket_sign_change(h, 1.0, -cgf_domain(arrivals).lo, lo, hi)) return kInf;
  return bisect_root(h, lo, hi, kRootTol);
}

std::vector<BandwidthPoint> alpha_s_curve(const DistributionSpec& arrivals, std::span<const double> thetas) {
  std::vector<BandwidthPoint> out;
  out.reserve(thetas.size());
  for (double t : thetas) out.push_back({t, curve_value(arrivals, t)});
  return out;
}

}  // namespace qsld
