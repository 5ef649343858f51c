#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "qsld/error.hpp"
#include "qsld/rng.hpp"
#include "qsld/variational.hpp"

using namespace qsld;

namespace {

const DistributionSpec kExp1{Exponential{1.0}};
const DistributionSpec kExp2{Exponential{2.0}};

double i_exp(double lambda, double x) { return lambda * x - 1.0 - std::log(lambda * x); }

// Closed form of the tilted-pair answer for the M/M/1 inputs.
double mm1_closed(double x1, double x2, double w) { return w + i_exp(1.0, x1) + i_exp(2.0, x2); }

}  // namespace

TEST_CASE("single busy period branch") {
  const VariationalProblem p(kExp1, kExp2);
  CHECK(p.delta() == doctest::Approx(1.0));
  // Both rate terms vanish at the swapped means; delta q remains with q = 0.5.
  CHECK(branch1_value(p, 0.5, 1.0, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(branch1_value(p, 1.0, 0.5, 0.0) == kInf);
  CHECK(branch1_value(p, 0.5, 1.0, 2.0) == doctest::Approx(2.5));
  // Argument order: I_A at x2, I_S at x1.
  CHECK(branch1_value(p, 0.7, 1.3, 0.0) == doctest::Approx(0.6 + i_exp(1.0, 1.3) + i_exp(2.0, 0.7)));
  CHECK_THROWS_AS(branch1_value(p, 1.0, 1.0, -0.1), Error);
}

TEST_CASE("g preconditions and constraint flag") {
  const VariationalProblem p(kExp1, kExp2);
  CHECK_THROWS_AS(g_eval(p, 1.0, 0.5, 0.0, {-0.1, 0.5, 0.5, 0.5}), Error);
  CHECK_THROWS_AS(g_eval(p, 1.0, 0.5, 0.0, {0.0, 1.5, 0.5, 0.5}), Error);
  const TwoPhaseValue off = g_eval(p, 1.0, 0.5, 0.0, {0.0, 0.5, 0.1, 0.2});
  CHECK(off.constraint_violated);
  CHECK(off.value == kInf);
}

TEST_CASE("g at a full first phase reproduces the plug-in value") {
  const VariationalProblem p(kExp1, kExp2);
  const double x1 = 0.9, x2 = 0.7, w = 0.6;
  // tau = 1: phase two is empty, so v1 = 0 and v2 = q; the constraint fixes q.
  const double q = (x2 + w - x1) / 2.0;
  const TwoPhaseValue v = g_eval(p, x1, x2, w, {q, 1.0, 0.0, q});
  CHECK_FALSE(v.constraint_violated);
  CHECK(v.value == doctest::Approx(i_exp(1.0, x2 - q) + i_exp(2.0, x2 - q + w) + q).epsilon(1e-10));
  // Vanishing phase with nonzero numerators is infinite.
  CHECK(g_eval(p, x1, x2, w, {q + 0.1, 1.0, 0.2, q + 0.1}).value == kInf);
}

TEST_CASE("g with v1 = v2 never undercuts the tilted-pair bound") {
  const VariationalProblem p(kExp1, kExp2);
  CounterRng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const double x1 = 0.3 + 1.5 * rng.uniform_open();
    const double x2 = 0.2 + 1.0 * rng.uniform_open();
    const double w = 1.5 * rng.uniform_open();
    const double tau = rng.uniform_open();
    const double v2 = x2 * rng.uniform_open();
    // v1 = v2 turns the constraint into q = x2 + w - x1.
    const double q = x2 + w - x1;
    if (q < 0.0) continue;
    const TwoPhaseValue g = g_eval(p, x1, x2, w, {q, tau, v2, v2});
    REQUIRE_FALSE(g.constraint_violated);
    CHECK(g.value >= mm1_closed(x1, x2, w) - 1e-9);
  }
}

TEST_CASE("minimize_J on the tilted M/M/1 pair") {
  const VariationalProblem p(kExp1, kExp2);
  const VariationalSolution at_means = minimize_J(p, 1.0, 0.5, 0.0);
  CHECK(at_means.value == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
  CHECK(at_means.branch == Branch::kTwoPhase);
  CHECK(at_means.feasibility_residual <= 1e-8);
  CHECK(at_means.witness.q >= 0.0);

  CHECK(std::abs(minimize_J(p, 1.0, 0.5, 1.0).value - 1.0) <= 1e-3);
  CHECK(std::abs(minimize_J(p, 1.2, 0.5, 0.5).value - mm1_closed(1.2, 0.5, 0.5)) <= 1e-3);
  CHECK_THROWS_AS(minimize_J(p, 0.0, 0.5, 0.0), Error);
  CHECK_THROWS_AS(minimize_J(p, 1.0, 0.5, -1.0), Error);
}

TEST_CASE("J is linear in w for tilted inputs") {
  const VariationalProblem p(kExp1, kExp2);
  for (double x1 : {0.8, 1.1}) {
    for (double x2 : {0.45, 0.6}) {
      const double j0 = minimize_J(p, x1, x2, 0.25).value;
      for (double w : {0.5, 1.0, 1.5}) {
        CHECK(std::abs(minimize_J(p, x1, x2, w).value - j0 - (w - 0.25)) <= 1e-3);
      }
    }
  }
}

TEST_CASE("undercuts of the closed form come with a failed phase-two inequality") {
  // On the constraint set as printed, J can fall below delta w + I_A(x1) +
  // I_S(x2) when x1 < x2; each such witness has v2 > v1.
  const VariationalProblem p(kExp1, kExp2);
  int undercuts = 0;
  for (double x1 : {0.3, 0.5, 0.8, 1.0, 1.2}) {
    for (double x2 : {0.4, 0.5, 0.8, 1.0}) {
      for (double w : {0.0, 0.4, 1.0}) {
        const VariationalSolution sol = minimize_J(p, x1, x2, w);
        CAPTURE(x1);
        CAPTURE(x2);
        CAPTURE(w);
        if (sol.value < mm1_closed(x1, x2, w) - 1e-6) {
          ++undercuts;
          CHECK(sol.branch == Branch::kTwoPhase);
          CHECK_FALSE(sol.phase_two_bound_holds);
          CHECK(x1 < x2);
        }
      }
    }
  }
  CHECK(undercuts > 0);
}

TEST_CASE("fixed-point gap on tilted pairs") {
  std::vector<std::array<double, 3>> grid;
  for (double x1 : {0.8, 0.9, 1.0, 1.1, 1.2}) {
    for (double x2 : {0.4, 0.45, 0.5, 0.55, 0.6}) {
      for (double w : {0.0, 0.5, 1.0}) grid.push_back({x1, x2, w});
    }
  }
  const FixedPointGap mm1 = fixed_point_gap(kExp1, kExp2, grid);
  CHECK(mm1.entries.size() == 75);
  CHECK(mm1.max_gap <= 1e-3);

  const FixedPointGap gam = fixed_point_gap(DistributionSpec(Gamma{2.0, 2.0}), Gamma{2.0, 4.0}, grid);
  CHECK(gam.max_gap <= 1e-3);

  CHECK_THROWS_AS(fixed_point_gap(kExp1, DistributionSpec(Gamma{2.0, 8.0}), grid), Error);
  try {
    fixed_point_gap(DistributionSpec(Deterministic{1.0}), TwoPoint{0.0, 2.0, 0.25}, grid);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotTilted);
  }
}

TEST_CASE("brute-force grid never undercuts the solver") {
  const std::vector<std::pair<DistributionSpec, DistributionSpec>> pairs = {
      {kExp1, kExp2}, {kExp1, Gamma{2.0, 8.0}}, {Gamma{2.0, 2.0}, Gamma{2.0, 4.0}}};
  const std::vector<std::array<double, 3>> triples = {
      {1.0, 0.5, 0.0}, {1.2, 0.4, 0.5}, {0.8, 0.6, 1.0}, {0.6, 0.9, 0.3}, {1.5, 0.3, 0.0}};
  for (const auto& [a, s] : pairs) {
    const VariationalProblem p(a, s);
    for (const auto& [x1, x2, w] : triples) {
      const VariationalSolution sol = minimize_J(p, x1, x2, w);
      const double brute = brute_force_two_phase_min(p, x1, x2, w, 37);
      CAPTURE(a.describe());
      CAPTURE(x1);
      CAPTURE(x2);
      CAPTURE(w);
      CHECK(brute >= sol.value - 1e-3);
      CHECK(branch1_value(p, x1, x2, w) >= sol.value);
      CHECK(sol.value >= 0.0);
      if (sol.branch == Branch::kTwoPhase) CHECK(sol.feasibility_residual <= 1e-8);
    }
  }
}

TEST_CASE("point-mass inputs are pinned") {
  const DistributionSpec a(Deterministic{1.0});
  const DistributionSpec s(TwoPoint{0.0, 2.0, 0.25});
  const VariationalProblem p(a, s);
  CHECK(p.delta() == doctest::Approx(std::log(3.0)));
  // Oracle: with A = 1 both A arguments equal 1, so v1 = 1 - tau,
  // v2 = x2 - tau and q = 1 - x1 + w; scan tau densely.
  for (const auto& [x1, x2, w] : std::vector<std::array<double, 3>>{
           {1.5, 1.0, 1.0}, {1.0, 1.0, 0.0}, {0.8, 1.2, 0.5}, {1.2, 0.6, 0.3}}) {
    double best = branch1_value(p, x1, x2, w);
    const double q = 1.0 - x1 + w;
    if (q >= 0.0) {
      for (int k = 0; k <= 100000; ++k) {
        const double tau = k / 100000.0;
        best = std::min(best, g_eval(p, x1, x2, w, {q, tau, 1.0 - tau, x2 - tau}).value);
      }
    }
    const VariationalSolution sol = minimize_J(p, x1, x2, w);
    CAPTURE(x1);
    CAPTURE(x2);
    CAPTURE(w);
    CHECK(sol.value <= best + 1e-9);
    CHECK(sol.value >= best - 1e-4);
  }
  const RateFunction is(s);
  CHECK(minimize_J(p, 1.5, 1.0, 1.0).value <= std::log(3.0) * 0.5 + is(1.5) + 1e-12);
}

TEST_CASE("tilt identity between the rate functions") {
  const std::vector<std::pair<DistributionSpec, double>> cases = {
      {kExp2, 1.0}, {Gamma{2.0, 4.0}, 2.0}, {TwoPoint{0.0, 2.0, 0.25}, 0.7}, {Gamma{0.5, 3.0}, -1.0}};
  for (const auto& [s, beta] : cases) {
    const RateFunction is(s);
    const RateFunction ia(tilt(s, beta));
    const SupportHull h = support_hull(s);
    const double lo = h.lo + 0.05;
    const double hi = std::isfinite(h.hi) ? h.hi - 0.05 : 3.0 * mean(s);
    for (int i = 0; i <= 8; ++i) {
      for (int j = 0; j <= 8; ++j) {
        const double x = lo + (hi - lo) * i / 8.0;
        const double y = lo + (hi - lo) * j / 8.0;
        CAPTURE(s.describe());
        CHECK(std::abs((ia(x) - ia(y)) - (is(x) - is(y) - beta * (x - y))) <= 1e-8);
      }
    }
  }
}

TEST_CASE("workload marginal: inf over outputs equals delta q") {
  const std::vector<double> q = {0.0, 1.0, 2.0};
  const CorollaryCheck mm1 = corollary_workload_consistency(kExp1, kExp2, q);
  CHECK(mm1.delta == doctest::Approx(1.0));
  REQUIRE(mm1.levels.size() == 3);
  CHECK(mm1.max_gap <= 1e-3);
  CHECK(mm1.levels[0].gap <= 1e-6);
  CHECK(mm1.levels[0].x1 == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(mm1.levels[0].x2 == doctest::Approx(0.5).epsilon(1e-2));

  const std::vector<double> one = {1.0};
  const CorollaryCheck bern =
      corollary_workload_consistency(DistributionSpec(Deterministic{1.0}), TwoPoint{0.0, 2.0, 0.25}, one);
  CHECK(std::abs(bern.levels[0].inf_value - std::log(3.0)) <= 1e-3);

  CHECK_THROWS_AS(corollary_workload_consistency(kExp2, kExp1, q), Error);
}
