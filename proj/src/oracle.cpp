#include "mlqmcfe/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mlqmcfe/util.hpp"

namespace mlqmcfe {

void gauss_legendre_halfcentered(int n, std::vector<double>* nodes, std::vector<double>* weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  nodes->assign(static_cast<std::size_t>(n), 0.0);
  weights->assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    // Newton from the Chebyshev initial guess
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    (*nodes)[static_cast<std::size_t>(n - 1 - i)] = 0.5 * x;  // scale [-1,1] -> [-1/2,1/2]
    (*weights)[static_cast<std::size_t>(n - 1 - i)] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

double tensor_quadrature(int s, int nodes_per_dim,
                         const std::function<double(std::span<const double>)>& F) {
  if (s < 1) throw std::invalid_argument("tensor_quadrature: s must be >= 1");
  const double budget = std::pow(static_cast<double>(nodes_per_dim), s);
  if (budget > 1e7) throw std::invalid_argument("tensor_quadrature: node budget exceeded");
  std::vector<double> x, w;
  gauss_legendre_halfcentered(nodes_per_dim, &x, &w);

  const long long total = static_cast<long long>(std::llround(budget));
  const long long outer = nodes_per_dim;  // parallel slabs over the first index
  const long long inner = total / outer;
  std::vector<double> slab(static_cast<std::size_t>(outer), 0.0);
  parallel_for(static_cast<std::size_t>(outer), [&](std::size_t o) {
    std::vector<double> y(static_cast<std::size_t>(s));
    std::vector<int> idx(static_cast<std::size_t>(s), 0);
    idx[0] = static_cast<int>(o);
    y[0] = x[o];
    KahanSum acc;
    for (long long c = 0; c < inner; ++c) {
      long long rem = c;
      double wt = w[o];
      for (int d = 1; d < s; ++d) {
        const int id = static_cast<int>(rem % nodes_per_dim);
        rem /= nodes_per_dim;
        y[static_cast<std::size_t>(d)] = x[static_cast<std::size_t>(id)];
        wt *= w[static_cast<std::size_t>(id)];
      }
      acc.add(wt * F(y));
    }
    slab[o] = acc.value();
  });
  KahanSum total_sum;
  for (double v : slab) total_sum.add(v);
  return total_sum.value();
}

ReferenceResult tensor_quadrature_reference(const CoefficientField& field, const ScalarFn& f,
                                            const ScalarFn& g, int s, const FeMesh& mesh,
                                            int nodes_per_dim) {
  auto integrand = [&](std::span<const double> y) {
    const FeSolution u = solve(mesh, field, y, f);
    return apply_functional(g, mesh, u);
  };
  ReferenceResult res;
  res.method = "tensor-gauss-legendre";
  res.nodes_per_dim = nodes_per_dim;
  res.mesh_level = mesh.level();
  res.value = tensor_quadrature(s, nodes_per_dim, integrand);
  const int low = std::max(2, nodes_per_dim / 2);
  if (low < nodes_per_dim) {
    const double coarse = tensor_quadrature(s, low, integrand);
    res.residual = std::abs(res.value - coarse);
  }
  return res;
}

double stechkin_tail(std::span<const double> b, double p, long long s, double tail_p) {
  if (!(p > 0.0) || !(p < 1.0)) throw std::invalid_argument("stechkin_tail: p must lie in (0,1)");
  if (s < 1) throw std::invalid_argument("stechkin_tail: s must be >= 1");
  for (std::size_t j = 1; j < b.size(); ++j)
    if (b[j] > b[j - 1] + 1e-15)
      throw std::invalid_argument("stechkin_tail: sequence must be nonincreasing (A5)");
  KahanSum sp;
  for (double bj : b) sp.add(std::pow(bj, p));
  const double lead = std::min(1.0 / (1.0 / p - 1.0), 1.0);
  return lead * std::pow(sp.value() + tail_p, 1.0 / p) *
         std::pow(static_cast<double>(s), -(1.0 / p - 1.0));
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logsum(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

double log_factorial(long long n) { return std::lgamma(static_cast<double>(n) + 1.0); }

}  // namespace

NastyReport verify_truncation_condition(const PodWeights& w, std::span<const double> b,
                                        long long s_prev, long long s_curr, double p, double q,
                                        int n, int max_order) {
  if (s_prev < 1 || s_curr <= s_prev)
    throw std::invalid_argument("verify_truncation_condition: need 1 <= s_prev < s_curr");
  if (static_cast<long long>(b.size()) < s_curr || w.dimension() < s_curr)
    throw std::invalid_argument("verify_truncation_condition: sequences shorter than s_curr");
  const int cap = max_order < 0 ? static_cast<int>(std::min<long long>(s_curr, w.order_cap()))
                                : max_order;

  // per-order log-scale symmetric sums of x_j = b_j^2 / gamma_j, split by
  // whether the subset touches the tail block {s_prev+1 : s_curr}
  std::vector<double> head(static_cast<std::size_t>(cap) + 1, kNegInf);
  std::vector<double> tail(static_cast<std::size_t>(cap) + 1, kNegInf);
  head[0] = 0.0;
  for (long long j = 1; j <= s_curr; ++j) {
    const double bj = b[static_cast<std::size_t>(j - 1)];
    const double lx =
        2.0 * std::log(bj) - std::log(w.product[static_cast<std::size_t>(j - 1)]);
    const bool in_tail = j > s_prev;
    for (int ell = cap; ell >= 1; --ell) {
      if (in_tail) {
        const double both = logsum(tail[static_cast<std::size_t>(ell - 1)],
                                   head[static_cast<std::size_t>(ell - 1)]);
        tail[static_cast<std::size_t>(ell)] =
            logsum(tail[static_cast<std::size_t>(ell)], lx + both);
      } else {
        tail[static_cast<std::size_t>(ell)] =
            logsum(tail[static_cast<std::size_t>(ell)], lx + tail[static_cast<std::size_t>(ell - 1)]);
        head[static_cast<std::size_t>(ell)] =
            logsum(head[static_cast<std::size_t>(ell)], lx + head[static_cast<std::size_t>(ell - 1)]);
      }
    }
  }

  double log_left = kNegInf, log_all = kNegInf;
  for (int ell = 0; ell <= cap; ++ell) {
    const double lg = w.log_order[static_cast<std::size_t>(ell)];
    if (tail[static_cast<std::size_t>(ell)] != kNegInf)
      log_left = logsum(log_left, 2.0 * log_factorial(ell) - lg + tail[static_cast<std::size_t>(ell)]);
    const double any = logsum(head[static_cast<std::size_t>(ell)], tail[static_cast<std::size_t>(ell)]);
    if (any != kNegInf)
      log_all = logsum(log_all, 2.0 * log_factorial(ell + n) - lg + any);
  }

  NastyReport rep;
  rep.alpha = 1.0 / p - 1.0 / q;
  rep.left = log_left == kNegInf ? 0.0 : std::exp(log_left);
  const double log_right = log_all - 2.0 * rep.alpha * std::log(static_cast<double>(s_prev));
  rep.right = log_right == kNegInf ? 0.0 : std::exp(log_right);
  rep.ratio = rep.right == 0.0 ? 0.0 : std::exp(log_left - log_right);
  if (log_left == kNegInf) rep.ratio = 0.0;
  return rep;
}

double brute_force_wce(const LatticeRule& rule,
                       const std::map<std::vector<int>, double>& weights) {
  if (rule.s > 3) throw std::invalid_argument("brute_force_wce: s must be <= 3");
  auto b2 = [](double x) { return x * x - x + 1.0 / 6.0; };
  double total = 0.0;
  for (const auto& [u, gamma_u] : weights) {
    if (u.empty()) continue;
    KahanSum avg;
    for (std::int64_t i = 1; i <= rule.N; ++i) {
      double prod = 1.0;
      for (int j : u) {
        const std::int64_t t = (i * rule.z[static_cast<std::size_t>(j - 1)]) % rule.N;
        prod *= b2(static_cast<double>(t) / static_cast<double>(rule.N));
      }
      avg.add(prod);
    }
    total += gamma_u * avg.value() / static_cast<double>(rule.N);
  }
  return total;
}

std::map<std::vector<int>, double> expand_pod_weights(const PodWeights& w, int s) {
  if (s > 16) throw std::invalid_argument("expand_pod_weights: s too large for enumeration");
  std::map<std::vector<int>, double> out;
  for (unsigned mask = 1; mask < (1u << s); ++mask) {
    std::vector<int> u;
    for (int j = 0; j < s; ++j)
      if (mask & (1u << j)) u.push_back(j + 1);
    out[u] = w.weight(u);
  }
  return out;
}

}  // namespace mlqmcfe
