#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "qsld/error.hpp"
#include "qsld/ratefn.hpp"
#include "qsld/scalar_search.hpp"

using namespace qsld;

namespace {

double exp_rate(double lambda, double x) { return lambda * x - 1.0 - std::log(lambda * x); }
double gamma_rate(double k, double lambda, double x) { return lambda * x - k - k * std::log(lambda * x / k); }
double two_point_rate(double l, double h, double p, double x) {
  const double u = (x - l) / (h - l);
  auto term = [](double a, double b) { return a == 0.0 ? 0.0 : a * std::log(a / b); };
  return term(u, p) + term(1.0 - u, 1.0 - p);
}

// Positive root of G by plain bisection on a fixed bracket.
double root_oracle(const DistributionSpec& a, const DistributionSpec& s, double hi) {
  double lo = 1e-9;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cgf(s, mid) + cgf(a, -mid) <= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("legendre reference values") {
  const RateFunction e1(Exponential{1.0});
  CHECK(e1(1.0) == 0.0);
  CHECK(e1(2.0) == doctest::Approx(2.0 - std::log(2.0) - 1.0).epsilon(1e-12));
  const RateFunction d1(Deterministic{1.0});
  CHECK(d1(1.0) == 0.0);
  CHECK(d1(1.5) == kInf);
  CHECK(d1(0.5) == kInf);
  const RateFunction tp(TwoPoint{0.0, 2.0, 0.25});
  CHECK(tp(3.0) == kInf);
  CHECK(tp(-0.1) == kInf);
  CHECK(e1(-0.5) == kInf);
  CHECK(legendre_eval(e1, 2.0) == e1(2.0));
}

TEST_CASE("exponential family matches the closed form on [0.1, 10]") {
  for (double lambda : {0.5, 1.0, 2.0, 7.0}) {
    const RateFunction rf(Exponential{lambda});
    for (double x : logspace(0.1, 10.0, 80)) {
      CAPTURE(lambda);
      CAPTURE(x);
      CHECK(std::abs(rf(x) - exp_rate(lambda, x)) <= 1e-8);
    }
  }
}

TEST_CASE("gamma and two-point closed forms") {
  const RateFunction g(Gamma{3.0, 1.5});
  for (double x : logspace(0.05, 12.0, 60)) CHECK(std::abs(g(x) - gamma_rate(3.0, 1.5, x)) <= 1e-8);
  const RateFunction t(TwoPoint{0.5, 3.0, 0.7});
  for (double x : linspace(0.5, 3.0, 41)) {
    CAPTURE(x);
    CHECK(std::abs(t(x) - two_point_rate(0.5, 3.0, 0.7, x)) <= 1e-8);
  }
  // Endpoints of a bounded hull: the sup converges to -log P(X = end).
  CHECK(t(3.0) == doctest::Approx(-std::log(0.7)).epsilon(1e-6));
  CHECK(t(0.5) == doctest::Approx(-std::log(0.3)).epsilon(1e-6));
}

TEST_CASE("rate function shape: nonnegative, zero at the mean, convex") {
  const std::vector<DistributionSpec> specs = {Exponential{2.0}, Gamma{2.0, 4.0}, TwoPoint{0.0, 2.0, 0.25},
                                               Gamma{0.5, 1.0}};
  for (const auto& spec : specs) {
    const RateFunction rf(spec);
    CHECK(rf(mean(spec)) == 0.0);
    const SupportHull h = support_hull(spec);
    const double hi = std::isfinite(h.hi) ? h.hi : mean(spec) * 6;
    const std::vector<double> xs = linspace(h.lo + 1e-3, hi - 1e-3, 101);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      CHECK(rf(xs[i]) >= 0.0);
      if (i > 0 && i + 1 < xs.size()) {
        CAPTURE(spec.describe());
        CAPTURE(xs[i]);
        CHECK(rf(xs[i]) <= 0.5 * (rf(xs[i - 1]) + rf(xs[i + 1])) + 1e-10);
      }
    }
  }
}

TEST_CASE("maximizer satisfies cgf'(theta) = x") {
  const std::vector<DistributionSpec> specs = {Exponential{1.0}, Gamma{3.0, 1.5}, TwoPoint{0.5, 3.0, 0.7}};
  for (const auto& spec : specs) {
    const RateFunction rf(spec);
    for (double factor : {0.6, 0.9, 1.2, 1.8}) {
      const double x = mean(spec) * factor;
      if (x <= support_hull(spec).lo || x >= support_hull(spec).hi) continue;
      const LegendreResult r = rf.evaluate(x);
      const double h = 1e-6;
      const double fd = (cgf(spec, r.theta_hat + h) - cgf(spec, r.theta_hat - h)) / (2 * h);
      CAPTURE(spec.describe());
      CAPTURE(x);
      CHECK(std::abs(fd - x) <= 1e-6);
    }
  }
}

TEST_CASE("joint rate") {
  const RateFunction a(Exponential{1.0});
  const RateFunction s(Exponential{2.0});
  CHECK(joint_rate(a, s, 1.0, 0.5) == 0.0);
  CHECK(joint_rate(a, s, 2.0, 0.5) == doctest::Approx(2.0 - std::log(2.0) - 1.0));
  CHECK(joint_rate(RateFunction(Deterministic{1.0}), s, 2.0, 0.5) == kInf);
}

TEST_CASE("delta by root") {
  DeltaResult d = delta_by_root(Exponential{1.0}, Exponential{2.0});
  CHECK(std::abs(d.delta - 1.0) <= 1e-10);
  CHECK_FALSE(d.at_domain_boundary);
  CHECK(std::isnan(d.method_agreement));

  d = delta_by_root(Deterministic{1.0}, TwoPoint{0.0, 2.0, 0.25});
  CHECK(std::abs(d.delta - std::log(3.0)) <= 1e-10);

  // Tilted gamma pair: delta equals the tilt parameter.
  d = delta_by_root(Gamma{2.0, 2.0}, Gamma{2.0, 4.0});
  CHECK(std::abs(d.delta - 2.0) <= 1e-10);

  CHECK_THROWS_AS(delta_by_root(Exponential{1.0}, Exponential{1.0}), Error);
  try {
    delta_by_root(Exponential{2.0}, Exponential{1.0});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnstableInputs);
  }
}

TEST_CASE("delta root zeroes G and matches an independent bisection") {
  const std::vector<std::pair<DistributionSpec, DistributionSpec>> pairs = {
      {Exponential{1.0}, Exponential{2.0}},
      {Exponential{1.0}, Gamma{2.0, 8.0}},
      {Gamma{3.0, 2.0}, Exponential{3.0}},
      {Deterministic{1.0}, Exponential{2.0}},
      {TwoPoint{0.5, 2.0, 0.5}, Gamma{2.0, 5.0}},
      {Exponential{0.8}, TwoPoint{0.0, 2.0, 0.25}},
  };
  for (const auto& [a, s] : pairs) {
    const DeltaResult d = delta_by_root(a, s);
    CAPTURE(a.describe());
    CAPTURE(s.describe());
    REQUIRE(std::isfinite(d.delta));
    CHECK(std::abs(cgf(s, d.delta) + cgf(a, -d.delta)) <= 1e-10);
    const double hi = std::min(cgf_domain(s).hi, 50.0) - 1e-12;
    CHECK(std::abs(d.delta - root_oracle(a, s, hi)) <= 1e-9);
  }
}

TEST_CASE("delta cross-method agreement") {
  const std::vector<std::pair<DistributionSpec, DistributionSpec>> pairs = {
      {Exponential{1.0}, Exponential{2.0}},
      {Deterministic{1.0}, TwoPoint{0.0, 2.0, 0.25}},
      {Exponential{1.0}, Gamma{2.0, 8.0}},
      {Gamma{2.0, 2.0}, Gamma{2.0, 4.0}},
  };
  for (const auto& [a, s] : pairs) {
    const DeltaResult d = cross_checked_delta(a, s);
    CAPTURE(a.describe());
    CAPTURE(s.describe());
    CHECK(d.method_agreement <= 1e-4);
  }
  CHECK(std::abs(delta_by_inf(Exponential{1.0}, Exponential{2.0}) - 1.0) <= 1e-4);
  CHECK(std::abs(delta_by_inf(Deterministic{1.0}, TwoPoint{0.0, 2.0, 0.25}) - std::log(3.0)) <= 1e-4);
}

TEST_CASE("point masses never fill the queue") {
  const DeltaResult d = cross_checked_delta(Deterministic{1.0}, Deterministic{0.5});
  CHECK(d.delta == kInf);
  CHECK(d.at_domain_boundary);
  CHECK(d.method_agreement == 0.0);
}

TEST_CASE("workload rate") {
  const DeltaResult one{1.0, 1.0, 0.0, false};
  CHECK(workload_rate(one, 0.0) == 0.0);
  CHECK(workload_rate(one, 2.5) == 2.5);
  const DeltaResult l3{std::log(3.0), std::log(3.0), 0.0, false};
  CHECK(workload_rate(l3, 1.0) == doctest::Approx(std::log(3.0)));
  CHECK(workload_rate({kInf, kInf, 0.0, true}, 0.0) == 0.0);
  CHECK_THROWS_AS(workload_rate(one, -1.0), Error);
}
