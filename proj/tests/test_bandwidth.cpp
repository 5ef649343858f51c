#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qsld/bandwidth.hpp"
#include "qsld/error.hpp"
#include "qsld/mc_estimator.hpp"
#include "qsld/ratefn.hpp"
#include "qsld/scalar_search.hpp"

using namespace qsld;

namespace {

const DistributionSpec kExp1{Exponential{1.0}};
const DistributionSpec kExp2{Exponential{2.0}};

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::kInvalidParameter;
}

}  // namespace

TEST_CASE("qos target") {
  const QosTarget t(std::exp(-2.0), 2.0);
  CHECK(t.theta_p() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(QosTarget(0.0, 1.0), Error);
  CHECK_THROWS_AS(QosTarget(1.0, 1.0), Error);
  CHECK_THROWS_AS(QosTarget(0.5, 0.0), Error);
}

TEST_CASE("delta for a deterministic arrival stream") {
  CHECK(std::abs(delta_of_deterministic_arrival(1.0, TwoPoint{0.0, 2.0, 0.25}) - std::log(3.0)) <= 1e-10);

  // log(2 / (2 - theta)) = theta, root found independently.
  const double d = delta_of_deterministic_arrival(1.0, kExp2);
  const double oracle =
      bisect_root([](double t) { return std::log(2.0 / (2.0 - t)) - t; }, 0.1, 1.999, 1e-15);
  CHECK(std::abs(d - oracle) <= 1e-10);
  CHECK(std::abs(std::log(2.0 / (2.0 - d)) - d) <= 1e-10);
  CHECK(d == doctest::Approx(1.5936).epsilon(1e-4));

  CHECK(code_of([] { delta_of_deterministic_arrival(0.4, kExp2); }) == ErrorCode::kUnstableInputs);
}

TEST_CASE("constant-rate arrivals agree with the general tail exponent") {
  for (const DistributionSpec s : {kExp2, DistributionSpec(Gamma{2.0, 5.0}), DistributionSpec(TwoPoint{0.0, 2.0, 0.25})}) {
    for (double a : {0.6, 0.8, 1.0, 1.7}) {
      if (a <= mean(s)) continue;
      CAPTURE(s.describe());
      CAPTURE(a);
      CHECK(std::abs(delta_of_deterministic_arrival(a, s) - delta_by_root(Deterministic{a}, s).delta) <= 1e-8);
    }
  }
}

TEST_CASE("effective bandwidth of the queue") {
  CHECK(effective_bandwidth_queue(QosTarget(std::exp(-2.0), 2.0), kExp2) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(code_of([] { effective_bandwidth_queue(QosTarget(std::exp(-2.0), 2.0), kExp1); }) ==
        ErrorCode::kThetaOutOfDomain);

  const std::vector<double> thetas = {0.0, 1e-8, 0.5, 1.0, 1.5, 1.9};
  const auto curve = alpha_a_curve(kExp2, thetas);
  CHECK(curve[0].value == 0.5);
  CHECK(curve[1].value == doctest::Approx(0.5).epsilon(1e-7));
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].value >= curve[i - 1].value);
}

TEST_CASE("closed form matches the inf definition") {
  for (const DistributionSpec s : {kExp2, DistributionSpec(Gamma{2.0, 5.0}), DistributionSpec(TwoPoint{0.0, 2.0, 0.25})}) {
    for (double p : {0.1, 0.01, 1e-4}) {
      for (double q : {2.0, 5.0, 10.0}) {
        const QosTarget t(p, q);
        if (!cgf_domain(s).contains(t.theta_p())) continue;
        const double closed = effective_bandwidth_queue(t, s);
        const double by_inf = effective_bandwidth_queue_by_inf(t, s);
        CAPTURE(s.describe());
        CAPTURE(p);
        CAPTURE(q);
        CHECK(std::abs(closed - by_inf) <= 1e-8);
        CHECK(std::abs(delta_of_deterministic_arrival(closed, s) - t.theta_p()) <= 1e-8);
      }
    }
  }
}

TEST_CASE("store bandwidth and its companion exponent") {
  CHECK(effective_bandwidth_store(QosTarget(std::exp(-1.0), 1.0), kExp2) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(code_of([] { effective_bandwidth_store(QosTarget(std::exp(-3.0), 1.0), kExp2); }) ==
        ErrorCode::kThetaOutOfDomain);

  const double d = delta_of_deterministic_supply(0.5, kExp1);
  CHECK(d > 0.0);
  CHECK(std::abs(cgf(kExp1, -d) + 0.5 * d) <= 1e-10);
  CHECK(code_of([] { delta_of_deterministic_supply(1.5, kExp1); }) == ErrorCode::kUnstableInputs);

  const std::vector<double> thetas = {0.0, 0.5, 1.0};
  const auto curve = alpha_s_curve(kExp2, thetas);
  CHECK(curve[0].value == 0.5);
  CHECK(curve[2].value == doctest::Approx(std::log(2.0)));
}

TEST_CASE("bandwidth is nondecreasing in theta_p") {
  double prev = 0.0;
  for (double q : {20.0, 10.0, 5.0, 3.0, 2.0, 1.5}) {
    const double a = effective_bandwidth_queue(QosTarget(0.01, q), Gamma{2.0, 8.0});
    CHECK(a >= prev);
    prev = a;
  }
}

TEST_CASE("simulated exceedance respects the target") {
  const QosTarget t(0.01, 5.0);
  const double a = effective_bandwidth_queue(t, kExp2);
  CHECK(t.theta_p() == doctest::Approx(0.921).epsilon(1e-3));
  CHECK(a == doctest::Approx(0.670).epsilon(1e-3));
  const std::size_t reps = 200000;
  const auto w = sample_stationary_workloads(Deterministic{a}, kExp2, reps, 1000, 404);
  const double hits = static_cast<double>(std::count_if(w.begin(), w.end(), [](double x) { return x >= 5.0; }));
  const double p_hat = hits / reps;
  const double se = std::sqrt(t.p() * (1 - t.p()) / reps);
  CHECK(p_hat <= t.p() + 3 * se);
}
