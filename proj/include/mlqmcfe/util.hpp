#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlqmcfe {

// Counter-based generator (splitmix64). Streams derived from (seed, id) pairs
// are independent of thread scheduling, which keeps estimator output
// reproducible under any degree of parallelism.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  // uniform in [0,1), 53-bit mantissa
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  // uniform in [lo,hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  std::uint64_t state_;
};

// Kahan compensated accumulator; deterministic when fed in canonical order.
class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0, c_ = 0.0;
};

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;  // max |log(err) - fit| over the points
};

// Least-squares fit of log(err) against log(x). Requires >= 3 points,
// strictly positive data, and pairwise distinct x.
LogLogFit fit_loglog(std::span<const double> x, std::span<const double> err);

// Number of worker threads: MLQMCFE_THREADS if set, else hardware concurrency.
int thread_count();

// Runs fn(i) for i in [0,n). Work is partitioned statically; fn must only
// write to per-index slots so that results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

std::uint64_t fnv1a64(const std::string& text);

std::string format_double(double v);  // shortest round-trip-ish fixed format for CSV

}  // namespace mlqmcfe
