#include "mlqmcfe/util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace mlqmcfe {

namespace {
std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  // mix the stream id through one round so nearby ids decorrelate
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  state_ = a ^ (stream * 0xda942042e4dd58b5ULL + 0x2545f4914f6cdd1dULL);
  (void)next_u64();
}

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> err) {
  if (x.size() != err.size()) throw std::invalid_argument("fit_loglog: size mismatch");
  if (x.size() < 3) throw std::invalid_argument("fit_loglog: need at least 3 points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), le(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(err[i] > 0.0))
      throw std::invalid_argument("fit_loglog: nonpositive data");
    lx[i] = std::log(x[i]);
    le[i] = std::log(err[i]);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (x[i] == x[j]) throw std::invalid_argument("fit_loglog: duplicate abscissa");
  double mx = 0, me = 0;
  for (std::size_t i = 0; i < n; ++i) { mx += lx[i]; me += le[i]; }
  mx /= static_cast<double>(n);
  me /= static_cast<double>(n);
  double sxx = 0, sxe = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxe += (lx[i] - mx) * (le[i] - me);
  }
  LogLogFit fit;
  fit.slope = sxe / sxx;
  fit.intercept = me - fit.slope * mx;
  for (std::size_t i = 0; i < n; ++i)
    fit.max_residual = std::max(fit.max_residual,
                                std::abs(le[i] - (fit.intercept + fit.slope * lx[i])));
  return fit;
}

int thread_count() {
  if (const char* env = std::getenv("MLQMCFE_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(nt);
  std::exception_ptr first_error = nullptr;
  std::mutex guard;
  for (std::size_t t = 0; t < nt; ++t) {
    workers.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += nt) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(guard);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

}  // namespace mlqmcfe
