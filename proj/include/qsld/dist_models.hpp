#pragma once

#include <limits>
#include <string>
#include <string_view>
#include <variant>

#include "qsld/rng.hpp"

namespace qsld {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Laws of the interarrival / service (demand / supply) variables. The family
// is closed under exponential tilting.
struct Exponential {
  double rate;
};
struct Deterministic {
  double value;
};
struct TwoPoint {
  double low;
  double high;
  double prob_high;
};
struct Gamma {
  double shape;
  double rate;
};

using Law = std::variant<Exponential, Deterministic, TwoPoint, Gamma>;

// Open interval (lo, hi); either end may be infinite.
struct Interval {
  double lo;
  double hi;

  bool contains(double x) const noexcept { return x > lo && x < hi; }
};

// Closed interval [lo, hi] holding the support of a law.
struct SupportHull {
  double lo;
  double hi;
};

// A validated law. Construction throws Error(kInvalidParameter) when a
// parameter is outside its admissible range.
class DistributionSpec {
 public:
  DistributionSpec(Exponential law);
  DistributionSpec(Deterministic law);
  DistributionSpec(TwoPoint law);
  DistributionSpec(Gamma law);

  const Law& law() const noexcept { return law_; }
  std::string_view kind() const noexcept;
  bool is_degenerate() const noexcept { return std::holds_alternative<Deterministic>(law_); }

  // Human-readable form, e.g. "Exponential(rate=2)".
  std::string describe() const;

  friend bool operator==(const DistributionSpec& a, const DistributionSpec& b);

 private:
  Law law_;
};

// Cumulant generating function log E exp(theta X). Returns +inf outside the
// effective domain instead of throwing.
double cgf(const DistributionSpec& spec, double theta);

// Analytic derivative of the CGF; +inf outside the domain.
double cgf_derivative(const DistributionSpec& spec, double theta);

// Maximal open interval on which cgf() is finite.
Interval cgf_domain(const DistributionSpec& spec);

double mean(const DistributionSpec& spec);
double variance(const DistributionSpec& spec);
SupportHull support_hull(const DistributionSpec& spec);

// One draw; advances rng.
double sample(const DistributionSpec& spec, CounterRng& rng);

// Law with density proportional to exp(beta x) relative to `spec`.
// Throws Error(kTiltOutOfDomain) when beta is outside cgf_domain(spec).
DistributionSpec tilt(const DistributionSpec& spec, double beta);

// Largest absolute parameter difference; +inf when the families differ.
double parameter_distance(const DistributionSpec& a, const DistributionSpec& b);

}  // namespace qsld
