#pragma once

#include "qsld/dist_models.hpp"

namespace qsld {

struct LegendreResult {
  double value;        // sup_theta { theta x - cgf(theta) }, possibly +inf
  double theta_hat;    // maximizer (or the last probe when the sup diverges)
};

// Legendre transform of a law's CGF, i.e. its Cramer rate function.
// Evaluation is numerical: golden-section search on the concave map
// theta -> theta x - cgf(theta) over theta >= 0 when x is above the mean
// and theta <= 0 below it, followed by a regula-falsi polish of
// cgf'(theta) = x inside the final bracket.
class RateFunction {
 public:
  explicit RateFunction(DistributionSpec spec);

  const DistributionSpec& spec() const noexcept { return spec_; }
  double mean() const noexcept { return mean_; }

  LegendreResult evaluate(double x) const;
  double operator()(double x) const { return evaluate(x).value; }

 private:
  DistributionSpec spec_;
  double mean_;
  Interval domain_;
  SupportHull hull_;
};

double legendre_eval(const RateFunction& rf, double x);

// I_A(a) + I_S(s); +inf absorbs.
double joint_rate(const RateFunction& rf_a, const RateFunction& rf_s, double a, double s);

struct DeltaResult {
  double delta;              // +inf when the workload never exceeds 0 at LD scale
  double theta_star;         // location of the positive root of G
  double method_agreement;   // |root - inf-ratio|; NaN until cross-checked
  bool at_domain_boundary;   // G stayed negative up to the domain edge
};

// Positive root of G(theta) = cgf_S(theta) + cgf_A(-theta) by geometric
// bracketing from 0 and bisection to 1e-12. Throws kUnstableInputs unless
// mean(services) < mean(arrivals).
DeltaResult delta_by_root(const DistributionSpec& arrivals, const DistributionSpec& services);

// inf over 0 < a < s of (I_A(a) + I_S(s)) / (s - a): a 200 x 200 grid
// log-spaced over the support hulls, refined by compass search. Oracle
// route for delta_by_root; it never looks at the root of G.
double delta_by_inf(const DistributionSpec& arrivals, const DistributionSpec& services);

// delta_by_root with method_agreement filled from delta_by_inf.
DeltaResult cross_checked_delta(const DistributionSpec& arrivals, const DistributionSpec& services);

// Rate function of the scaled stationary workload, delta * q.
double workload_rate(const DeltaResult& delta, double q);

void require_stable(const DistributionSpec& arrivals, const DistributionSpec& services);

}  // namespace qsld
