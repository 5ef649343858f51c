#include "qsld/queue_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "qsld/error.hpp"
#include "qsld/ratefn.hpp"

namespace qsld {

double lindley_step(double w, double s, double a) { return std::max(w + s - a, 0.0); }

Trace build_trace(std::vector<double> a, std::vector<double> s, double w_init, std::uint64_t seed) {
  if (a.size() != s.size()) throw Error(ErrorCode::kLengthMismatch, "a and s differ in length");
  if (!(w_init >= 0.0)) throw Error(ErrorCode::kInvalidParameter, "w_init must be >= 0");
  const std::size_t n = a.size();
  Trace t;
  t.seed = seed;
  t.a = std::move(a);
  t.s = std::move(s);
  t.w.resize(n + 1);
  t.r.resize(n);
  t.b.resize(n);
  t.d.resize(n > 0 ? n - 1 : 0);
  t.w[0] = w_init;
  for (std::size_t k = 0; k < n; ++k) {
    t.w[k + 1] = lindley_step(t.w[k], t.s[k], t.a[k]);
    t.r[k] = t.s[k] + t.w[k] - t.w[k + 1];
    t.b[k] = t.a[k] + t.w[k + 1] - t.w[k];
  }
  for (std::size_t k = 0; k + 1 < n; ++k) t.d[k] = t.b[k] + t.s[k + 1] - t.s[k];
  return t;
}

namespace {

double quantize(double x, int bits) {
  if (bits <= 0) return x;
  const double scale = std::ldexp(1.0, bits);
  const double q = std::round(x * scale) / scale;
  return (x > 0.0 && q <= 0.0) ? 1.0 / scale : q;
}

}  // namespace

Trace simulate_trace(const DistributionSpec& arrivals, const DistributionSpec& services, std::size_t n,
                     CounterRng& rng, const TraceOptions& options) {
  std::vector<double> a(n);
  std::vector<double> s(n);
  for (std::size_t k = 0; k < n; ++k) {
    a[k] = quantize(sample(arrivals, rng), options.quantize_bits);
    s[k] = quantize(sample(services, rng), options.quantize_bits);
  }
  return build_trace(std::move(a), std::move(s), options.w_init);
}

Trace simulate_trace(const DistributionSpec& arrivals, const DistributionSpec& services, std::size_t n,
                     std::uint64_t seed, const TraceOptions& options) {
  CounterRng rng(seed);
  Trace t = simulate_trace(arrivals, services, n, rng, options);
  t.seed = seed;
  return t;
}

InvariantReport check_invariants(const Trace& t) {
  InvariantReport rep;
  const std::size_t n = t.size();
  double sum_r = 0.0;
  double sum_s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    rep.lindley = std::max(rep.lindley, std::abs(t.w[k + 1] - std::max(t.w[k] + t.s[k] - t.a[k], 0.0)));
    const double met = std::min(t.w[k] + t.s[k], t.a[k]);
    rep.back2 = std::max({rep.back2, std::abs(t.r[k] - met), std::abs(t.s[k] + t.w[k] - t.w[k + 1] - met)});
    rep.b_negativity = std::max(rep.b_negativity, -t.b[k]);
    sum_r += t.r[k];
    sum_s += t.s[k];
    if (!(t.r[k] > 0.0)) rep.positive_outputs = false;
  }
  // Departure epochs relative to the arrival of customer 0.
  double arrival = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double depart_k = arrival + t.w[k] + t.s[k];
    const double depart_next = std::max(arrival + t.a[k], depart_k) + t.s[k + 1];
    rep.output_d = std::max(rep.output_d, std::abs(t.d[k] - (depart_next - depart_k)));
    if (!(t.d[k] > 0.0)) rep.positive_outputs = false;
    arrival += t.a[k];
  }
  rep.conservation = n > 0 ? std::abs(sum_r + t.w[n] - t.w[0] - sum_s) : 0.0;
  return rep;
}

double workload_sup_oracle(std::span<const double> a, std::span<const double> s) {
  if (a.size() != s.size()) throw Error(ErrorCode::kLengthMismatch, "a and s differ in length");
  double best = 0.0;
  double prefix = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    prefix += s[k] - a[k];
    best = std::max(best, prefix);
  }
  return best;
}

double loynes_stationary_workload(const DistributionSpec& arrivals, const DistributionSpec& services,
                                  std::size_t burn_in, const CounterRng& rng) {
  require_stable(arrivals, services);
  double w = 0.0;
  for (std::size_t k = burn_in; k >= 1; --k) {
    CounterRng step = rng.split(k);
    const double a = sample(arrivals, step);
    const double s = sample(services, step);
    w = lindley_step(w, s, a);
  }
  return w;
}

PolygonalPath::PolygonalPath(std::vector<double> partial_sums, std::size_t scale)
    : sums_(std::move(partial_sums)), scale_(scale) {
  if (scale_ == 0) throw Error(ErrorCode::kInvalidParameter, "polygonal scale must be positive");
  if (sums_.empty() || sums_.front() != 0.0) {
    throw Error(ErrorCode::kInvalidParameter, "partial sums must start at 0");
  }
}

double PolygonalPath::horizon() const noexcept {
  return static_cast<double>(sums_.size() - 1) / static_cast<double>(scale_);
}

double PolygonalPath::operator()(double t) const {
  const double n = static_cast<double>(scale_);
  const double nt = n * t;
  if (!(t >= 0.0) || nt > static_cast<double>(sums_.size() - 1) * (1.0 + 1e-12)) {
    throw Error(ErrorCode::kInvalidParameter, "t=" + std::to_string(t) + " outside the path horizon");
  }
  const double knot = std::round(nt);
  if (std::abs(nt - knot) <= 1e-12 * std::max(1.0, nt)) {
    return sums_[static_cast<std::size_t>(knot)] / n;
  }
  const auto k = static_cast<std::size_t>(std::floor(nt));
  return sums_[k] / n + (t - static_cast<double>(k) / n) * (sums_[k + 1] - sums_[k]);
}

PolygonalPath polygonal(std::vector<double> partial_sums, std::size_t scale) {
  return PolygonalPath(std::move(partial_sums), scale);
}

std::vector<double> backward_partial_sums(std::span<const double> x) {
  std::vector<double> out(x.size() + 1, 0.0);
  for (std::size_t k = 1; k <= x.size(); ++k) out[k] = out[k - 1] + x[x.size() - k];
  return out;
}

double phi_identity_check(const Trace& trace, std::span<const double> t_grid) {
  const std::size_t n = trace.size();
  if (n == 0) return 0.0;
  const PolygonalPath a_path(backward_partial_sums(trace.a), n);
  const PolygonalPath s_path(backward_partial_sums(trace.s), n);
  const PolygonalPath b_path(backward_partial_sums(trace.b), n);
  const PolygonalPath r_path(backward_partial_sums(trace.r), n);
  const double scale = static_cast<double>(n);
  const double boundary = trace.w[0] / scale;

  // f = S~ - A~ at the knots; the sup over s beyond the horizon is replaced
  // by the known initial workload entering at s = 1.
  std::vector<double> f(n + 1);
  for (std::size_t k = 0; k <= n; ++k) f[k] = s_path.sums()[k] / scale - a_path.sums()[k] / scale;
  // later[k] = max over knots j in [k, n-1] of f[j], together with f[n] + w0/n.
  std::vector<double> later(n + 1);
  later[n] = f[n] + boundary;
  for (std::size_t k = n; k-- > 0;) later[k] = std::max(later[k + 1], f[k]);
  const double sup_all = later[0];

  double worst = 0.0;
  for (double t : t_grid) {
    if (!(t > 0.0 && t <= 1.0)) throw Error(ErrorCode::kInvalidParameter, "t must lie in (0, 1]");
    const double nt = t * scale;
    const double knot = std::round(nt);
    const bool at_knot = std::abs(nt - knot) <= 1e-12 * std::max(1.0, nt);
    const std::size_t first_after = at_knot ? static_cast<std::size_t>(knot) + 1
                                            : static_cast<std::size_t>(std::floor(nt)) + 1;
    const double f_t = s_path(t) - a_path(t);
    const double tail = std::max(0.0, (first_after <= n ? later[first_after] : boundary + f[n]) - f_t);
    const double b_rhs = a_path(t) + sup_all - tail;
    const double r_rhs = s_path(t) - sup_all + tail;
    worst = std::max({worst, std::abs(b_path(t) - b_rhs), std::abs(r_path(t) - r_rhs)});
  }
  return worst;
}

void write_trace_csv(std::ostream& out, const Trace& t, const DistributionSpec& arrivals,
                     const DistributionSpec& services) {
  out << "# seed=" << t.seed << " arrivals=" << arrivals.describe() << " services=" << services.describe()
      << " n=" << t.size() << " w_init=" << (t.w.empty() ? 0.0 : t.w[0]) << '\n';
  out << "a,s,w,d,r,b\n";
  char buf[64];
  auto cell = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (std::size_t k = 0; k < t.size(); ++k) {
    cell(t.a[k]);
    out << ',';
    cell(t.s[k]);
    out << ',';
    cell(t.w[k]);
    out << ',';
    if (k < t.d.size()) cell(t.d[k]);
    out << ',';
    cell(t.r[k]);
    out << ',';
    cell(t.b[k]);
    out << '\n';
  }
  out << ",,";
  if (!t.w.empty()) cell(t.w.back());
  out << ",,,\n";
}

}  // namespace qsld
