#pragma once

#include <span>
#include <vector>

#include "qsld/dist_models.hpp"

namespace qsld {

// Tail target P(w >= q) <= p; theta_p = -log(p) / q.
class QosTarget {
 public:
  QosTarget(double p, double q);

  double p() const noexcept { return p_; }
  double q() const noexcept { return q_; }
  double theta_p() const noexcept { return theta_p_; }

 private:
  double p_;
  double q_;
  double theta_p_;
};

// Queue fed at a constant rate a (deterministic interarrival a):
// largest theta >= 0 with cgf_S(theta) <= a theta. Throws kUnstableInputs
// unless a > mean(services).
double delta_of_deterministic_arrival(double a, const DistributionSpec& services);

// cgf_S(theta_p) / theta_p. Throws kThetaOutOfDomain when theta_p is not
// strictly inside the domain of cgf_S.
double effective_bandwidth_queue(const QosTarget& target, const DistributionSpec& services);

// Same quantity from its definition: the smallest a with
// delta_of_deterministic_arrival(a) >= theta_p, found by bisection on a.
double effective_bandwidth_queue_by_inf(const QosTarget& target, const DistributionSpec& services);

struct BandwidthPoint {
  double theta;
  double value;
};

// theta -> cgf_S(theta) / theta on the given grid, with mean(services)
// standing in for theta = 0. Named alpha_A by the customary labelling,
// even though it is built from the service CGF.
std::vector<BandwidthPoint> alpha_a_curve(const DistributionSpec& services, std::span<const double> thetas);

// Store with supply rate s per period: cgf_A(theta_p) / theta_p.
double effective_bandwidth_store(const QosTarget& target, const DistributionSpec& arrivals);

// Store drained at constant s: -(most negative theta with cgf_A(theta) <= s theta).
// Throws kUnstableInputs unless s < mean(arrivals).
double delta_of_deterministic_supply(double s, const DistributionSpec& arrivals);

// theta -> cgf_A(theta) / theta (alpha_S by the same labelling).
std::vector<BandwidthPoint> alpha_s_curve(const DistributionSpec& arrivals, std::span<const double> thetas);

}  // namespace qsld
