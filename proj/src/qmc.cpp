#include "mlqmcfe/qmc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "mlqmcfe/util.hpp"

namespace mlqmcfe {

double riemann_zeta(double x) {
  if (!(x > 1.0)) throw std::invalid_argument("riemann_zeta: requires x > 1");
  const int n = 64;
  KahanSum s;
  for (int k = 1; k < n; ++k) s.add(std::pow(static_cast<double>(k), -x));
  const double nd = static_cast<double>(n);
  double tail = std::pow(nd, 1.0 - x) / (x - 1.0) + 0.5 * std::pow(nd, -x);
  // Euler-Maclaurin corrections with B2, B4, B6
  double t1 = x * std::pow(nd, -x - 1.0) / 12.0;
  double t2 = x * (x + 1.0) * (x + 2.0) * std::pow(nd, -x - 3.0) / 720.0;
  double t3 = x * (x + 1.0) * (x + 2.0) * (x + 3.0) * (x + 4.0) * std::pow(nd, -x - 5.0) / 30240.0;
  return s.value() + tail + t1 - t2 + t3;
}

double rho(double lambda) {
  if (!(lambda > 0.5) || lambda > 1.0)
    throw std::invalid_argument("rho: lambda must lie in (1/2, 1]");
  const double two_pi_sq = 2.0 * std::numbers::pi * std::numbers::pi;
  return 2.0 * riemann_zeta(2.0 * lambda) / std::pow(two_pi_sq, lambda);
}

double lambda_q(double q, double delta) {
  if (!(q > 0.0) || q > 1.0) throw std::invalid_argument("lambda_q: q must lie in (0, 1]");
  if (q == 1.0) return 1.0;
  if (q > 2.0 / 3.0) return q / (2.0 - q);
  if (!(delta > 0.0) || !(delta < 0.5))
    throw std::invalid_argument("lambda_q: delta must lie in (0, 1/2)");
  return 1.0 / (2.0 - 2.0 * delta);
}

double PodWeights::order_ratio(int ell) const {
  return std::exp(log_order[ell] - log_order[ell - 1]);
}

double PodWeights::log_weight(std::span<const int> u) const {
  double lw = log_order[u.size()];
  for (int j : u) lw += std::log(product[static_cast<std::size_t>(j) - 1]);
  return lw;
}

double PodWeights::weight(std::span<const int> u) const { return std::exp(log_weight(u)); }

PodWeights pod_weights(std::span<const double> beta, double lambda, int s_max) {
  if (s_max < 1 || s_max > 4096) throw std::invalid_argument("pod_weights: s_max out of range");
  if (static_cast<int>(beta.size()) < s_max)
    throw std::invalid_argument("pod_weights: beta shorter than s_max");
  PodWeights w;
  w.lambda = lambda;
  const double e = 2.0 / (1.0 + lambda);
  w.log_order.resize(static_cast<std::size_t>(s_max) + 1);
  w.log_order[0] = 0.0;  // Gamma_0 = (3!/6)^e = 1
  for (int ell = 1; ell <= s_max; ++ell)
    w.log_order[ell] = w.log_order[ell - 1] + e * std::log(static_cast<double>(ell + 3));
  const double sqrt_rho = std::sqrt(rho(lambda));
  w.product.resize(static_cast<std::size_t>(s_max));
  for (int j = 0; j < s_max; ++j) {
    if (!(beta[j] > 0.0)) throw std::invalid_argument("pod_weights: beta must be positive");
    w.product[j] = std::pow(beta[j] / sqrt_rho, e);
  }
  return w;
}

bool is_prime(std::int64_t n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (std::int64_t d = 3; d * d <= n; d += 2)
    if (n % d == 0) return false;
  return true;
}

std::int64_t next_prime(std::int64_t n) {
  if (n < 2) throw std::invalid_argument("next_prime: n must be >= 2");
  while (!is_prime(n)) ++n;
  return n;
}

namespace {

inline double bernoulli2(double x) { return x * x - x + 1.0 / 6.0; }

// Order accumulators scaled relative to Gamma: state[ell][i] holds
// Gamma_ell * sum_{|u|=ell} prod_{j in u} gamma_j B2({i z_j / N}).
struct CbcState {
  std::int64_t N;
  int order_cap;
  std::vector<std::vector<double>> q;  // q[ell], ell = 0..order_cap; q[0] = 1
  std::vector<double> b2tab;           // B2(k/N), k = 0..N-1
  int components = 0;

  CbcState(std::int64_t N_, int cap) : N(N_), order_cap(cap) {
    q.resize(static_cast<std::size_t>(cap) + 1);
    q[0].assign(static_cast<std::size_t>(N), 1.0);
    for (int ell = 1; ell <= cap; ++ell) q[ell].assign(static_cast<std::size_t>(N), 0.0);
    b2tab.resize(static_cast<std::size_t>(N));
    for (std::int64_t k = 0; k < N; ++k)
      b2tab[static_cast<std::size_t>(k)] = bernoulli2(static_cast<double>(k) / static_cast<double>(N));
  }

  // W(i) = sum_ell r_ell q_{ell-1}(i) for the component about to be added.
  std::vector<double> mix_vector(const PodWeights& w) const {
    const int top = std::min(components + 1, order_cap);
    std::vector<double> mix(static_cast<std::size_t>(N), 0.0);
    for (int ell = 1; ell <= top; ++ell) {
      const double r = w.order_ratio(ell);
      const auto& prev = q[ell - 1];
      for (std::int64_t i = 0; i < N; ++i)
        mix[static_cast<std::size_t>(i)] += r * prev[static_cast<std::size_t>(i)];
    }
    return mix;
  }

  double error_sq() const {
    KahanSum total;
    for (int ell = 1; ell <= std::min(components, order_cap); ++ell)
      for (std::int64_t i = 0; i < N; ++i) total.add(q[ell][static_cast<std::size_t>(i)]);
    return total.value() / static_cast<double>(N);
  }

  void add_component(const PodWeights& w, double gamma_j, std::int64_t z) {
    const int top = std::min(components + 1, order_cap);
    for (int ell = top; ell >= 1; --ell) {
      const double r = w.order_ratio(ell);
      auto& cur = q[ell];
      const auto& prev = q[ell - 1];
      std::int64_t k = 0;
      for (std::int64_t i = 0; i < N; ++i) {
        k += z;
        if (k >= N) k -= N;
        cur[static_cast<std::size_t>(i)] +=
            r * gamma_j * b2tab[static_cast<std::size_t>(k)] * prev[static_cast<std::size_t>(i)];
      }
    }
    ++components;
  }
};

void check_cbc_args(int s, std::int64_t N) {
  if (s < 1) throw std::invalid_argument("cbc: s must be >= 1");
  if (N < 3 || !is_prime(N)) throw std::invalid_argument("cbc: N must be a prime >= 3");
  if (static_cast<double>(s + 1) * static_cast<double>(N) > 5.0e7)
    throw std::invalid_argument("cbc: accumulator memory guard exceeded (s*N too large)");
}

}  // namespace

LatticeRule cbc_construct(int s, std::int64_t N, const PodWeights& w,
                          std::vector<double>* per_step_error) {
  check_cbc_args(s, N);
  if (w.dimension() < s) throw std::invalid_argument("cbc: weights cover fewer than s indices");
  CbcState st(N, std::min(s, w.order_cap()));
  LatticeRule rule;
  rule.s = s;
  rule.N = N;
  rule.z.reserve(static_cast<std::size_t>(s));
  if (per_step_error) per_step_error->clear();

  const std::int64_t n_cand = N - 1;
  std::vector<double> scores(static_cast<std::size_t>(n_cand));
  for (int d = 0; d < s; ++d) {
    const double gamma_j = w.product[static_cast<std::size_t>(d)];
    const std::vector<double> mix = st.mix_vector(w);
    parallel_for(static_cast<std::size_t>(n_cand), [&](std::size_t c) {
      const std::int64_t z = static_cast<std::int64_t>(c) + 1;
      std::int64_t k = 0;
      KahanSum acc;
      double block = 0.0;
      int in_block = 0;
      for (std::int64_t i = 0; i < N; ++i) {
        k += z;
        if (k >= N) k -= N;
        block += st.b2tab[static_cast<std::size_t>(k)] * mix[static_cast<std::size_t>(i)];
        if (++in_block == 4096) {
          acc.add(block);
          block = 0.0;
          in_block = 0;
        }
      }
      acc.add(block);
      scores[c] = gamma_j * acc.value() / static_cast<double>(N);
    });
    // Smallest candidate wins; improvements below rounding noise are ignored so
    // that exact permutation ties (e.g. the s = 1 component) resolve to z = 1.
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c)
      if (scores[c] < scores[best] - 1e-12 * std::abs(scores[best])) best = c;
    const std::int64_t z_d = static_cast<std::int64_t>(best) + 1;
    rule.z.push_back(z_d);
    st.add_component(w, gamma_j, z_d);
    if (per_step_error) per_step_error->push_back(st.error_sq());
  }
  return rule;
}

double shift_avg_wce(const LatticeRule& rule, const PodWeights& w) {
  if (w.dimension() < rule.s) throw std::invalid_argument("wce: weights cover fewer than s indices");
  check_cbc_args(rule.s, rule.N);
  CbcState st(rule.N, std::min(rule.s, w.order_cap()));
  for (int d = 0; d < rule.s; ++d)
    st.add_component(w, w.product[static_cast<std::size_t>(d)], rule.z[static_cast<std::size_t>(d)] % rule.N);
  return st.error_sq();
}

void lattice_point(const LatticeRule& rule, std::int64_t i, std::span<const double> shift,
                   std::span<double> out) {
  for (int j = 0; j < rule.s; ++j) {
    const std::int64_t t = (i * rule.z[static_cast<std::size_t>(j)]) % rule.N;
    double v = static_cast<double>(t) / static_cast<double>(rule.N);
    if (!shift.empty()) {
      // frac-periodic in the shift, so Delta and Delta + 1 coincide
      v += shift[static_cast<std::size_t>(j)];
      v -= std::floor(v);
    }
    out[static_cast<std::size_t>(j)] = v - 0.5;
  }
}

std::vector<std::vector<double>> generate_points(const LatticeRule& rule,
                                                 std::span<const double> shift) {
  if (!shift.empty() && static_cast<int>(shift.size()) != rule.s)
    throw std::invalid_argument("generate_points: shift dimension mismatch");
  std::vector<std::vector<double>> pts(static_cast<std::size_t>(rule.N),
                                       std::vector<double>(static_cast<std::size_t>(rule.s)));
  for (std::int64_t i = 1; i <= rule.N; ++i)
    lattice_point(rule, i, shift, pts[static_cast<std::size_t>(i - 1)]);
  return pts;
}

std::string serialize_rule(const LatticeRule& rule, double lambda) {
  std::ostringstream os;
  os << rule.s << " " << rule.N << " " << format_double(lambda) << "\n";
  for (auto zj : rule.z) os << zj << "\n";
  return os.str();
}

LatticeRule parse_rule(const std::string& text, double* lambda_out) {
  std::istringstream is(text);
  LatticeRule rule;
  double lambda = 0.0;
  if (!(is >> rule.s >> rule.N >> lambda)) throw std::runtime_error("parse_rule: bad header");
  rule.z.resize(static_cast<std::size_t>(rule.s));
  for (int j = 0; j < rule.s; ++j)
    if (!(is >> rule.z[static_cast<std::size_t>(j)]))
      throw std::runtime_error("parse_rule: truncated generating vector");
  if (lambda_out) *lambda_out = lambda;
  return rule;
}

}  // namespace mlqmcfe
