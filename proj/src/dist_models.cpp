#include "qsld/dist_models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qsld/error.hpp"

namespace qsld {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidParameter, what);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

// 1 / (1 + exp(-z)) without overflow.
double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Tilted success probability of a two-point law.
double tilted_prob(const TwoPoint& law, double beta) {
  const double logit = std::log(law.prob_high) - std::log1p(-law.prob_high);
  return logistic(beta * (law.high - law.low) + logit);
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

DistributionSpec::DistributionSpec(Exponential law) : law_(law) {
  require(finite_positive(law.rate), "exponential rate must be > 0, got " + fmt(law.rate));
}

DistributionSpec::DistributionSpec(Deterministic law) : law_(law) {
  require(finite_positive(law.value), "deterministic value must be > 0, got " + fmt(law.value));
}

DistributionSpec::DistributionSpec(TwoPoint law) : law_(law) {
  require(std::isfinite(law.low) && law.low >= 0.0, "two-point low must be >= 0");
  require(std::isfinite(law.high) && law.high > law.low, "two-point high must exceed low");
  require(law.prob_high > 0.0 && law.prob_high < 1.0, "two-point prob_high must lie in (0, 1)");
}

DistributionSpec::DistributionSpec(Gamma law) : law_(law) {
  require(finite_positive(law.shape), "gamma shape must be > 0");
  require(finite_positive(law.rate), "gamma rate must be > 0");
}

std::string_view DistributionSpec::kind() const noexcept {
  return std::visit(Overloaded{
                        [](const Exponential&) { return std::string_view("exponential"); },
                        [](const Deterministic&) { return std::string_view("deterministic"); },
                        [](const TwoPoint&) { return std::string_view("two_point"); },
                        [](const Gamma&) { return std::string_view("gamma"); },
                    },
                    law_);
}

std::string DistributionSpec::describe() const {
  return std::visit(
      Overloaded{
          [](const Exponential& l) { return "Exponential(rate=" + fmt(l.rate) + ")"; },
          [](const Deterministic& l) { return "Deterministic(value=" + fmt(l.value) + ")"; },
          [](const TwoPoint& l) {
            return "TwoPoint(low=" + fmt(l.low) + ", high=" + fmt(l.high) +
                   ", prob_high=" + fmt(l.prob_high) + ")";
          },
          [](const Gamma& l) { return "Gamma(shape=" + fmt(l.shape) + ", rate=" + fmt(l.rate) + ")"; },
      },
      law_);
}

bool operator==(const DistributionSpec& a, const DistributionSpec& b) {
  return parameter_distance(a, b) == 0.0;
}

double cgf(const DistributionSpec& spec, double theta) {
  return std::visit(Overloaded{
                        [theta](const Exponential& l) {
                          return theta < l.rate ? -std::log1p(-theta / l.rate) : kInf;
                        },
                        [theta](const Deterministic& l) { return l.value * theta; },
                        [theta](const TwoPoint& l) {
                          const double spread = theta * (l.high - l.low);
                          if (spread <= 0.0) {
                            return theta * l.low + std::log1p(l.prob_high * std::expm1(spread));
                          }
                          return theta * l.high + std::log1p((1.0 - l.prob_high) * std::expm1(-spread));
                        },
                        [theta](const Gamma& l) {
                          return theta < l.rate ? -l.shape * std::log1p(-theta / l.rate) : kInf;
                        },
                    },
                    spec.law());
}

double cgf_derivative(const DistributionSpec& spec, double theta) {
  return std::visit(Overloaded{
                        [theta](const Exponential& l) { return theta < l.rate ? 1.0 / (l.rate - theta) : kInf; },
                        [](const Deterministic& l) { return l.value; },
                        [theta](const TwoPoint& l) { return l.low + (l.high - l.low) * tilted_prob(l, theta); },
                        [theta](const Gamma& l) { return theta < l.rate ? l.shape / (l.rate - theta) : kInf; },
                    },
                    spec.law());
}

Interval cgf_domain(const DistributionSpec& spec) {
  return std::visit(Overloaded{
                        [](const Exponential& l) { return Interval{-kInf, l.rate}; },
                        [](const Deterministic&) { return Interval{-kInf, kInf}; },
                        [](const TwoPoint&) { return Interval{-kInf, kInf}; },
                        [](const Gamma& l) { return Interval{-kInf, l.rate}; },
                    },
                    spec.law());
}

double mean(const DistributionSpec& spec) {
  return std::visit(Overloaded{
                        [](const Exponential& l) { return 1.0 / l.rate; },
                        [](const Deterministic& l) { return l.value; },
                        [](const TwoPoint& l) { return l.low + (l.high - l.low) * l.prob_high; },
                        [](const Gamma& l) { return l.shape / l.rate; },
                    },
                    spec.law());
}

double variance(const DistributionSpec& spec) {
  return std::visit(Overloaded{
                        [](const Exponential& l) { return 1.0 / (l.rate * l.rate); },
                        [](const Deterministic&) { return 0.0; },
                        [](const TwoPoint& l) {
                          const double spread = l.high - l.low;
                          return spread * spread * l.prob_high * (1.0 - l.prob_high);
                        },
                        [](const Gamma& l) { return l.shape / (l.rate * l.rate); },
                    },
                    spec.law());
}

SupportHull support_hull(const DistributionSpec& spec) {
  return std::visit(Overloaded{
                        [](const Exponential&) { return SupportHull{0.0, kInf}; },
                        [](const Deterministic& l) { return SupportHull{l.value, l.value}; },
                        [](const TwoPoint& l) { return SupportHull{l.low, l.high}; },
                        [](const Gamma&) { return SupportHull{0.0, kInf}; },
                    },
                    spec.law());
}

namespace {

// Marsaglia & Tsang (2000); shape < 1 uses the u^(1/shape) boost.
double sample_gamma(const Gamma& l, CounterRng& rng) {
  const double shape = l.shape < 1.0 ? l.shape + 1.0 : l.shape;
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  double draw = 0.0;
  for (;;) {
    const double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform_open();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
      draw = d * v;
      break;
    }
  }
  if (l.shape < 1.0) draw *= std::pow(rng.uniform_open(), 1.0 / l.shape);
  return draw / l.rate;
}

}  // namespace

double sample(const DistributionSpec& spec, CounterRng& rng) {
  return std::visit(Overloaded{
                        [&rng](const Exponential& l) { return -std::log(rng.uniform_open()) / l.rate; },
                        [](const Deterministic& l) { return l.value; },
                        [&rng](const TwoPoint& l) { return rng.uniform_open() < l.prob_high ? l.high : l.low; },
                        [&rng](const Gamma& l) { return sample_gamma(l, rng); },
                    },
                    spec.law());
}

DistributionSpec tilt(const DistributionSpec& spec, double beta) {
  if (!std::isfinite(beta) || !cgf_domain(spec).contains(beta)) {
    throw Error(ErrorCode::kTiltOutOfDomain,
                "beta=" + fmt(beta) + " outside the CGF domain of " + spec.describe());
  }
  if (beta == 0.0) return spec;
  return std::visit(Overloaded{
                        [beta](const Exponential& l) { return DistributionSpec(Exponential{l.rate - beta}); },
                        [](const Deterministic& l) { return DistributionSpec(l); },
                        [beta, &spec](const TwoPoint& l) {
                          const double p = tilted_prob(l, beta);
                          if (!(p > 0.0 && p < 1.0)) {
                            throw Error(ErrorCode::kTiltOutOfDomain,
                                        "tilt of " + spec.describe() + " by " + fmt(beta) +
                                            " degenerates in double precision");
                          }
                          return DistributionSpec(TwoPoint{l.low, l.high, p});
                        },
                        [beta](const Gamma& l) { return DistributionSpec(Gamma{l.shape, l.rate - beta}); },
                    },
                    spec.law());
}

double parameter_distance(const DistributionSpec& a, const DistributionSpec& b) {
  if (a.law().index() != b.law().index()) return kInf;
  return std::visit(
      Overloaded{
          [&b](const Exponential& l) { return std::abs(l.rate - std::get<Exponential>(b.law()).rate); },
          [&b](const Deterministic& l) { return std::abs(l.value - std::get<Deterministic>(b.law()).value); },
          [&b](const TwoPoint& l) {
            const auto& r = std::get<TwoPoint>(b.law());
            return std::max({std::abs(l.low - r.low), std::abs(l.high - r.high),
                             std::abs(l.prob_high - r.prob_high)});
          },
          [&b](const Gamma& l) {
            const auto& r = std::get<Gamma>(b.law());
            return std::max(std::abs(l.shape - r.shape), std::abs(l.rate - r.rate));
          },
      },
      a.law());
}

}  // namespace qsld
