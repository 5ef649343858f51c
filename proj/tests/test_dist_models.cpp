#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qsld/dist_models.hpp"
#include "qsld/error.hpp"

using namespace qsld;

namespace {

// Closed forms written out independently of the library.
double cgf_closed(const DistributionSpec& spec, double t) {
  const Law& law = spec.law();
  if (auto* e = std::get_if<Exponential>(&law)) return t < e->rate ? std::log(e->rate / (e->rate - t)) : kInf;
  if (auto* g = std::get_if<Gamma>(&law)) return t < g->rate ? g->shape * std::log(g->rate / (g->rate - t)) : kInf;
  if (auto* d = std::get_if<Deterministic>(&law)) return d->value * t;
  const auto& p = std::get<TwoPoint>(law);
  return std::log((1 - p.prob_high) * std::exp(t * p.low) + p.prob_high * std::exp(t * p.high));
}

std::vector<DistributionSpec> family() {
  return {Exponential{1.0}, Exponential{2.0}, Deterministic{1.0}, TwoPoint{0.0, 2.0, 0.25},
          TwoPoint{0.5, 3.0, 0.7}, Gamma{2.0, 4.0}, Gamma{3.0, 1.5}, Gamma{0.5, 1.0}};
}

}  // namespace

TEST_CASE("cgf reference values") {
  CHECK(cgf(Exponential{1.0}, 0.0) == 0.0);
  CHECK(cgf(Exponential{2.0}, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(cgf(Exponential{1.0}, 1.0) == kInf);
  CHECK(cgf(Exponential{1.0}, 1.5) == kInf);
  CHECK(cgf(Deterministic{1.0}, 3.0) == 3.0);
  CHECK(cgf(Gamma{3.0, 1.5}, 1.5) == kInf);
}

TEST_CASE("cgf matches closed forms on a grid") {
  for (const auto& spec : family()) {
    const Interval dom = cgf_domain(spec);
    for (double t = -5.0; t <= 5.0; t += 0.125) {
      const double ref = cgf_closed(spec, t);
      CAPTURE(spec.describe());
      CAPTURE(t);
      if (!dom.contains(t)) {
        CHECK(cgf(spec, t) == kInf);
      } else {
        CHECK(cgf(spec, t) == doctest::Approx(ref).epsilon(1e-12).scale(1.0));
      }
    }
  }
}

TEST_CASE("cgf domains") {
  Interval d = cgf_domain(Exponential{2.0});
  CHECK(d.lo == -kInf);
  CHECK(d.hi == 2.0);
  d = cgf_domain(TwoPoint{0.0, 2.0, 0.25});
  CHECK(d.lo == -kInf);
  CHECK(d.hi == kInf);
  d = cgf_domain(Gamma{3.0, 1.5});
  CHECK(d.hi == 1.5);
}

TEST_CASE("means and variances") {
  CHECK(mean(Exponential{2.0}) == 0.5);
  CHECK(mean(TwoPoint{0.0, 2.0, 0.25}) == 0.5);
  CHECK(mean(Gamma{2.0, 4.0}) == 0.5);
  CHECK(variance(Exponential{2.0}) == doctest::Approx(0.25));
  CHECK(variance(TwoPoint{0.0, 2.0, 0.25}) == doctest::Approx(4 * 0.25 * 0.75));
  for (const auto& spec : family()) {
    const double h = 1e-6;
    const double fd = (cgf(spec, h) - cgf(spec, -h)) / (2 * h);
    CAPTURE(spec.describe());
    CHECK(std::abs(fd - mean(spec)) <= 1e-6);
    const double fd2 = (cgf_derivative(spec, h) - cgf_derivative(spec, -h)) / (2 * h);
    CHECK(fd2 == doctest::Approx(variance(spec)).epsilon(1e-6));
  }
}

TEST_CASE("cgf derivative against finite differences") {
  for (const auto& spec : family()) {
    for (double t : {-2.0, -0.5, 0.0, 0.3, 0.7}) {
      if (!cgf_domain(spec).contains(t + 1e-4)) continue;
      const double h = 1e-5;
      const double fd = (cgf(spec, t + h) - cgf(spec, t - h)) / (2 * h);
      CAPTURE(spec.describe());
      CAPTURE(t);
      CHECK(cgf_derivative(spec, t) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("constructors reject inadmissible parameters") {
  CHECK_THROWS_AS(DistributionSpec(Exponential{0.0}), Error);
  CHECK_THROWS_AS(DistributionSpec(Exponential{-1.0}), Error);
  CHECK_THROWS_AS(DistributionSpec(Deterministic{0.0}), Error);
  CHECK_THROWS_AS(DistributionSpec(TwoPoint{-0.1, 1.0, 0.5}), Error);
  CHECK_THROWS_AS(DistributionSpec(TwoPoint{1.0, 1.0, 0.5}), Error);
  CHECK_THROWS_AS(DistributionSpec(TwoPoint{0.0, 1.0, 0.0}), Error);
  CHECK_THROWS_AS(DistributionSpec(TwoPoint{0.0, 1.0, 1.0}), Error);
  CHECK_THROWS_AS(DistributionSpec(Gamma{0.0, 1.0}), Error);
  CHECK_THROWS_AS(DistributionSpec(Gamma{1.0, std::nan("")}), Error);
  try {
    DistributionSpec(Exponential{0.0});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidParameter);
  }
}

TEST_CASE("sampling") {
  CounterRng rng(5);
  CHECK(sample(Deterministic{1.0}, rng) == 1.0);

  SUBCASE("reproducible") {
    CounterRng r1(123);
    CounterRng r2(123);
    for (int i = 0; i < 100; ++i) CHECK(sample(Exponential{1.0}, r1) == sample(Exponential{1.0}, r2));
  }
  SUBCASE("exponential mean over 1e6 draws") {
    CounterRng r(2024);
    double sum = 0;
    for (int i = 0; i < 1000000; ++i) sum += sample(Exponential{1.0}, r);
    CHECK(std::abs(sum / 1e6 - 1.0) < 0.005);
  }
  SUBCASE("two-point frequencies") {
    CounterRng r(77);
    int highs = 0;
    for (int i = 0; i < 100000; ++i) {
      const double x = sample(TwoPoint{0.0, 2.0, 0.25}, r);
      REQUIRE((x == 0.0 || x == 2.0));
      highs += x == 2.0;
    }
    CHECK(std::abs(highs / 1e5 - 0.25) < 0.01);
  }
  SUBCASE("gamma moments") {
    CounterRng r(9);
    for (const DistributionSpec spec : {DistributionSpec(Gamma{2.0, 4.0}), DistributionSpec(Gamma{0.5, 1.0})}) {
      double s1 = 0, s2 = 0;
      const int n = 400000;
      for (int i = 0; i < n; ++i) {
        const double x = sample(spec, r);
        REQUIRE(x >= 0.0);
        s1 += x;
        s2 += x * x;
      }
      const double m = s1 / n;
      const double v = s2 / n - m * m;
      CHECK(std::abs(m - mean(spec)) < 5 * std::sqrt(variance(spec) / n));
      CHECK(v == doctest::Approx(variance(spec)).epsilon(0.02));
    }
  }
}

TEST_CASE("cgf against Monte Carlo log-mean-exp") {
  const int n = 1000000;
  for (const auto& spec : family()) {
    const Interval dom = cgf_domain(spec);
    for (double t : {-1.0, -0.25, 0.2, 0.4}) {
      // Keep 2t inside the domain so the estimator has finite variance.
      if (!dom.contains(2 * t)) continue;
      CounterRng r(static_cast<std::uint64_t>(1000 * (t + 3)));
      double s1 = 0, s2 = 0;
      for (int i = 0; i < n; ++i) {
        const double e = std::exp(t * sample(spec, r));
        s1 += e;
        s2 += e * e;
      }
      const double m = s1 / n;
      const double se = std::sqrt(std::max(0.0, s2 / n - m * m) / n);
      CAPTURE(spec.describe());
      CAPTURE(t);
      CHECK(std::abs(m - std::exp(cgf(spec, t))) <= 3.0 * se + 1e-9 * m);  // summation rounding
    }
  }
}

TEST_CASE("tilting") {
  CHECK(tilt(Exponential{2.0}, 1.0) == DistributionSpec(Exponential{1.0}));
  CHECK(tilt(Gamma{2.0, 4.0}, 2.0) == DistributionSpec(Gamma{2.0, 2.0}));
  CHECK(tilt(Deterministic{1.0}, 5.0) == DistributionSpec(Deterministic{1.0}));
  const auto tp = std::get<TwoPoint>(tilt(TwoPoint{0.0, 2.0, 0.25}, std::log(std::sqrt(3.0))).law());
  CHECK(tp.prob_high == doctest::Approx(0.5).epsilon(1e-14));

  for (const auto& spec : family()) {
    CHECK(tilt(spec, 0.0) == spec);
  }
  CHECK_THROWS_AS(tilt(Exponential{1.0}, 1.0), Error);
  try {
    tilt(Gamma{2.0, 1.0}, 3.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTiltOutOfDomain);
  }
}

TEST_CASE("tilt-cgf relation and round trip") {
  for (const auto& spec : family()) {
    for (double beta : {-1.5, -0.3, 0.2, 0.45}) {
      if (!cgf_domain(spec).contains(beta)) continue;
      const DistributionSpec tilted = tilt(spec, beta);
      for (double t = -3.0; t <= 3.0; t += 0.25) {
        if (!cgf_domain(spec).contains(t + beta)) continue;
        CAPTURE(spec.describe());
        CAPTURE(beta);
        CAPTURE(t);
        const double lhs = cgf(tilted, t);
        const double rhs = cgf(spec, t + beta) - cgf(spec, beta);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
      }
      CHECK(parameter_distance(tilt(tilted, -beta), spec) <= 1e-12);
    }
  }
}

TEST_CASE("support hulls and distance") {
  const SupportHull h = support_hull(TwoPoint{0.5, 3.0, 0.7});
  CHECK(h.lo == 0.5);
  CHECK(h.hi == 3.0);
  CHECK(support_hull(Exponential{1.0}).hi == kInf);
  CHECK(parameter_distance(Exponential{1.0}, Gamma{1.0, 1.0}) == kInf);
  CHECK(parameter_distance(Exponential{1.0}, Exponential{1.5}) == doctest::Approx(0.5));
}
