#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "qsld/dist_models.hpp"
#include "qsld/rng.hpp"

namespace qsld {

// One realization of the queue/store model in forward (chronological)
// indexing: customer / slot k = 0..n-1.
//
//   w[k+1] = max(w[k] + s[k] - a[k], 0)     workload (stock level)
//   r[k]   = min(w[k] + s[k], a[k])         time at the very back / demand met
//   d[k]   = a[k] + w[k+1] - w[k] + s[k+1] - s[k]   interdeparture, k < n-1
//   b[k]   = a[k] + w[k+1] - w[k]           time between service starts
//
// d needs s[k+1], so it has n-1 entries; the last departure gap is absent.
struct Trace {
  std::vector<double> a;
  std::vector<double> s;
  std::vector<double> w;  // n + 1 entries, w[0] = w_init
  std::vector<double> d;  // n - 1 entries
  std::vector<double> r;
  std::vector<double> b;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return a.size(); }
};

struct TraceOptions {
  double w_init = 0.0;
  // When > 0, every draw is rounded to a multiple of 2^-quantize_bits so
  // that all partial sums are exact in double precision.
  int quantize_bits = 0;
};

double lindley_step(double w, double s, double a);

// Fills the derived sequences from a, s and w_init.
Trace build_trace(std::vector<double> a, std::vector<double> s, double w_init, std::uint64_t seed = 0);

// Draws n i.i.d. pairs (a_k, s_k) from CounterRng(seed) and builds the trace.
Trace simulate_trace(const DistributionSpec& arrivals, const DistributionSpec& services, std::size_t n,
                     std::uint64_t seed, const TraceOptions& options = {});

// Same, drawing from an existing stream.
Trace simulate_trace(const DistributionSpec& arrivals, const DistributionSpec& services, std::size_t n,
                     CounterRng& rng, const TraceOptions& options = {});

// Max residual of each defining identity over the whole trace.
struct InvariantReport {
  double lindley = 0.0;
  double back2 = 0.0;          // min(w+s, a) against s + w[k] - w[k+1]
  double output_d = 0.0;       // d against the departure-epoch difference
  double b_negativity = 0.0;   // max(0, -b[k])
  double conservation = 0.0;   // sum r + w[n] - w[0] - sum s
  bool positive_outputs = true;  // r > 0 and d > 0 (meaningful for positive inputs)

  bool holds(double tol) const {
    return lindley <= tol && back2 <= tol && output_d <= tol && b_negativity <= tol &&
           conservation <= tol && positive_outputs;
  }
};

InvariantReport check_invariants(const Trace& trace);

// Stationary-workload formula evaluated by direct scan. Inputs are in
// reversed order: element 0 is the most recent customer. Returns
// max_{0<=k<=n} sum_{i<k} (s_i - a_i), which equals the Lindley iterate
// started empty and run over the chronological (reversed) sequence.
// Throws kLengthMismatch when the lengths differ.
double workload_sup_oracle(std::span<const double> a_recent_first, std::span<const double> s_recent_first);

// One approximate draw of the stationary workload: Lindley iterated from 0
// over `burn_in` steps. Step k (k = 1 is the most recent) draws its pair from
// rng.split(k), so the draws for burn_in and 2 * burn_in share their most
// recent burn_in innovations (backward coupling). Throws kUnstableInputs.
double loynes_stationary_workload(const DistributionSpec& arrivals, const DistributionSpec& services,
                                  std::size_t burn_in, const CounterRng& rng);

// Piecewise-linear interpolation of partial sums scaled by 1/n, with knots at
// multiples of 1/n. Requires sums[0] == 0.
class PolygonalPath {
 public:
  PolygonalPath(std::vector<double> partial_sums, std::size_t scale);

  double operator()(double t) const;
  std::size_t scale() const noexcept { return scale_; }
  double horizon() const noexcept;  // largest admissible t
  std::span<const double> sums() const noexcept { return sums_; }

 private:
  std::vector<double> sums_;
  std::size_t scale_;
};

PolygonalPath polygonal(std::vector<double> partial_sums, std::size_t scale);

// Partial sums of the most recent customers: out[k] = x[n-1] + ... + x[n-k].
std::vector<double> backward_partial_sums(std::span<const double> x);

// Checks the output-from-input identities for B~ and R~ at each t in
// t_grid (0 < t <= 1, scale n = trace length): both sides are evaluated from
// polygonal paths of the backward partial sums, with the sup over s > t
// truncated at the trace start and the known w[0] entering as the boundary
// term. Returns the max absolute residual.
double phi_identity_check(const Trace& trace, std::span<const double> t_grid);

// Columnar CSV (header a,s,w,d,r,b) preceded by a '#' metadata row.
void write_trace_csv(std::ostream& out, const Trace& trace, const DistributionSpec& arrivals,
                     const DistributionSpec& services);

}  // namespace qsld
