#include "mlqmcfe/mlqmc.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "mlqmcfe/util.hpp"

namespace mlqmcfe {

double cost_factor(int scenario, double h, int d, long long s_ell) {
  const double hd = std::pow(h, -d);
  if (scenario == 1) return hd * std::max(std::log(hd), std::log(2.0));
  return hd * static_cast<double>(s_ell);
}

namespace {

long long ceil_pow2_expr(double exponent) {
  const double v = std::exp2(exponent);
  if (v > 9.0e18) throw std::invalid_argument("plan: parameter formula overflows (2^x too large)");
  return static_cast<long long>(std::ceil(v - 1e-12));
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

double scenario1_N0(int L, double tau, double lambda, int d) {
  const double Ld = static_cast<double>(std::max(L, 1));
  if (d < 2.0 * tau * lambda && !close(d, 2.0 * tau * lambda))
    return std::exp2(L * tau * 2.0 * lambda);
  if (close(d, 2.0 * tau * lambda))
    return std::exp2(L * tau * 2.0 * lambda) *
           std::pow(Ld, lambda * (lambda + 2.0) / (lambda + 1.0));
  return std::exp2(L * tau * (d / tau + 2.0) * lambda / (lambda + 1.0)) *
         std::pow(Ld, lambda / (lambda + 1.0));
}

double scenario2_N0(int L, double tau, double lambda, int d, double eta, double xi) {
  const double r = d / tau;
  const double Ld = static_cast<double>(std::max(L, 1));
  if (close(r, 2.0 * lambda - eta))
    return std::exp2(L * tau * 2.0 * lambda) * std::pow(Ld, lambda);
  if (r < 2.0 * lambda - eta) return std::exp2(L * tau * 2.0 * lambda);
  if (close(r, 2.0 * lambda))
    return std::exp2(L * tau * (2.0 * (lambda + 1.0) + xi) * lambda / (lambda + 1.0)) *
           std::pow(Ld, lambda);
  if (r < 2.0 * lambda)
    return std::exp2(L * tau * (2.0 * (lambda + 1.0) + (xi / eta) * (r - 2.0 * lambda + eta)) *
                     lambda / (lambda + 1.0));
  return std::exp2(L * tau * (2.0 + r + xi) * lambda / (lambda + 1.0));
}

double scenario3_N0(int L, double tau, double lambda, int d, double xi) {
  const double r = d / tau;
  const double Ld = static_cast<double>(std::max(L, 1));
  if (close(r, 2.0 * lambda))
    return std::exp2(L * tau * (2.0 * (lambda + 1.0) + xi) * lambda / (lambda + 1.0)) *
           std::pow(Ld, lambda);
  if (r < 2.0 * lambda)
    return std::exp2(L * tau * (2.0 * (lambda + 1.0) + xi) * lambda / (lambda + 1.0));
  return std::exp2(L * tau * (2.0 + r + xi) * lambda / (lambda + 1.0));
}

}  // namespace

MlPlan plan(const PlanInputs& in) {
  if (in.scenario < 1 || in.scenario > 3)
    throw std::invalid_argument("plan: scenario must be 1, 2, or 3");
  if (!(in.tau > 0.0) || in.tau > 2.0) throw std::invalid_argument("plan: tau must lie in (0, 2]");
  if (in.m_star < 2 || in.m_star > 64)
    throw std::invalid_argument("plan: shift replicates m* must lie in [2, 64]");

  MlPlan out;
  out.scenario = in.scenario;
  out.tau = in.tau;
  out.d = in.d;
  out.p = in.p;
  out.q = in.q;
  out.delta = in.delta;
  out.N0_scale = in.N0_scale;
  out.k = in.k;
  out.h0 = in.h0 > 0.0 ? in.h0 : (in.d == 1 ? 1.0 : 0.5);

  if ((in.epsilon > 0.0) == (in.L >= 0))
    throw std::invalid_argument("plan: specify exactly one of epsilon or L");
  out.L = in.L >= 0 ? in.L
                    : static_cast<int>(std::ceil(std::log2(1.0 / in.epsilon) / in.tau - 1e-12));
  if (out.L < 0) out.L = 0;
  if (out.L > in.caps.L_max) throw std::invalid_argument("plan: L exceeds the configured cap");

  out.lambda = in.lambda_override > 0.0 ? in.lambda_override : lambda_q(in.q, in.delta);
  if (!(out.lambda > 0.5) || out.lambda > 1.0)
    throw std::invalid_argument("plan: lambda must lie in (1/2, 1]");

  const int L = out.L;
  out.h.resize(static_cast<std::size_t>(L) + 1);
  for (int ell = 0; ell <= L; ++ell) out.h[static_cast<std::size_t>(ell)] = std::ldexp(out.h0, -ell);

  out.s.resize(static_cast<std::size_t>(L) + 1);
  if (in.scenario == 1) {
    if (!in.basis)
      throw std::invalid_argument("plan: scenario 1 needs multiresolution level counts");
    for (int ell = 0; ell <= L; ++ell)
      out.s[static_cast<std::size_t>(ell)] = in.basis->s_ell_orthogonal(ell, in.k);
  } else if (in.scenario == 2) {
    if (!(in.p > 0.0) || !(in.p < in.q) || in.q > 1.0)
      throw std::invalid_argument(
          "plan: scenario 2 needs 0 < p < q <= 1 (p = q is scenario 3: eta would divide by zero)");
    out.eta = in.p * in.q / (in.q - in.p);
    out.xi = in.p / (2.0 - 2.0 * in.p);
    for (int ell = 0; ell <= L; ++ell)
      out.s[static_cast<std::size_t>(ell)] =
          std::min(ceil_pow2_expr(ell * in.tau * out.eta), ceil_pow2_expr(L * in.tau * out.xi));
    out.crossover_level = static_cast<int>(
        std::floor(L * (in.q - in.p) / (in.q * (2.0 - 2.0 * in.p)) + 1e-12));
  } else {
    if (!(in.p == in.q) || !(in.p < 1.0))
      throw std::invalid_argument("plan: scenario 3 needs p = q < 1");
    out.xi = in.p / (2.0 - 2.0 * in.p);
    for (int ell = 0; ell <= L; ++ell)
      out.s[static_cast<std::size_t>(ell)] = ceil_pow2_expr(L * in.tau * out.xi);
  }
  if (out.s.back() > in.caps.s_max)
    throw std::invalid_argument("plan: s_L exceeds the configured cap");

  // N_0 from the scenario table, then the cost-balanced profile of the levels
  double N0_raw;
  if (in.scenario == 1)
    N0_raw = scenario1_N0(L, in.tau, out.lambda, in.d);
  else if (in.scenario == 2)
    N0_raw = scenario2_N0(L, in.tau, out.lambda, in.d, out.eta, out.xi);
  else
    N0_raw = scenario3_N0(L, in.tau, out.lambda, in.d, out.xi);
  N0_raw *= in.N0_scale;

  out.N.resize(static_cast<std::size_t>(L) + 1);
  out.m.assign(static_cast<std::size_t>(L) + 1, in.m_star);
  const double K0 = cost_factor(in.scenario, out.h[0], in.d, out.s[0]);
  for (int ell = 0; ell <= L; ++ell) {
    double raw = N0_raw;
    if (ell > 0) {
      const double Kl = cost_factor(in.scenario, out.h[static_cast<std::size_t>(ell)], in.d,
                                    out.s[static_cast<std::size_t>(ell)]);
      const double ratio = std::pow(out.h0, -2.0 * in.tau) * K0 *
                           std::pow(out.h[static_cast<std::size_t>(ell)], 2.0 * in.tau) / Kl;
      raw = N0_raw * std::pow(ratio, out.lambda / (out.lambda + 1.0));
    }
    long long Nl = static_cast<long long>(std::ceil(raw - 1e-12));
    if (Nl < 2) Nl = 2;
    Nl = next_prime(Nl);
    if (Nl > in.caps.N_max) throw std::invalid_argument("plan: N_ell exceeds the configured cap");
    out.N[static_cast<std::size_t>(ell)] = Nl;
  }

  out.theta.assign(static_cast<std::size_t>(L) + 1, 1);
  if (in.scenario == 1) {
    out.theta.assign(static_cast<std::size_t>(L) + 1, 0);
  } else {
    for (int ell = 0; ell < L; ++ell)
      if (out.s[static_cast<std::size_t>(ell) + 1] == out.s[static_cast<std::size_t>(ell)])
        out.theta[static_cast<std::size_t>(ell)] = 0;
  }
  return out;
}

double cost_model(const MlPlan& plan) {
  KahanSum total;
  for (int ell = 0; ell <= plan.L; ++ell)
    total.add(static_cast<double>(plan.m[static_cast<std::size_t>(ell)]) *
              static_cast<double>(plan.N[static_cast<std::size_t>(ell)]) *
              cost_factor(plan.scenario, plan.h[static_cast<std::size_t>(ell)], plan.d,
                          plan.s[static_cast<std::size_t>(ell)]));
  return total.value();
}

namespace {

// One shift replicate of Q_ell(G(u_ell - u_{ell-1})); coarse truncation uses
// the first s_coarse coordinates of the same point.
double level_replicate(const CoefficientField& field, const FeMesh& fine_mesh,
                       const FeMesh* coarse_mesh, long long s_fine, long long s_coarse,
                       const ScalarFn& f, const ScalarFn& g, const LatticeRule& rule,
                       std::span<const double> shift, AssemblyMode mode, long long* solves) {
  std::vector<double> y(static_cast<std::size_t>(s_fine));
  KahanSum acc;
  for (std::int64_t i = 1; i <= rule.N; ++i) {
    lattice_point(rule, i, shift, y);
    const FeSolution uf = solve(fine_mesh, field, y, f, mode);
    double val = apply_functional(g, fine_mesh, uf);
    if (coarse_mesh) {
      const FeSolution uc = solve(*coarse_mesh, field,
                                  std::span<const double>(y.data(), static_cast<std::size_t>(s_coarse)),
                                  f, mode);
      val -= apply_functional(g, *coarse_mesh, uc);
      *solves += 2;
    } else {
      *solves += 1;
    }
    acc.add(val);
  }
  return acc.value() / static_cast<double>(rule.N);
}

}  // namespace

MlEstimate ml_estimate(const MlPlan& plan, const CoefficientField& field,
                       const std::vector<FeMesh>& meshes, const ScalarFn& f, const ScalarFn& g,
                       const std::vector<LatticeRule>& rules, std::uint64_t seed,
                       AssemblyMode mode) {
  const int L = plan.L;
  if (static_cast<int>(meshes.size()) <= L)
    throw std::invalid_argument("ml_estimate: hierarchy shallower than the plan");
  if (static_cast<int>(rules.size()) <= L)
    throw std::invalid_argument("ml_estimate: one lattice rule per level required");
  for (int ell = 0; ell <= L; ++ell) {
    if (rules[static_cast<std::size_t>(ell)].s != static_cast<int>(plan.s[static_cast<std::size_t>(ell)]))
      throw std::invalid_argument("ml_estimate: rule dimension does not match plan s_ell");
    if (rules[static_cast<std::size_t>(ell)].N != plan.N[static_cast<std::size_t>(ell)])
      throw std::invalid_argument("ml_estimate: rule size does not match plan N_ell");
  }

  const auto t0 = std::chrono::steady_clock::now();
  MlEstimate est;
  est.seed = seed;
  est.levels.resize(static_cast<std::size_t>(L) + 1);

  // flatten (level, replicate) work items
  std::vector<std::pair<int, int>> items;
  for (int ell = 0; ell <= L; ++ell)
    for (int r = 0; r < plan.m[static_cast<std::size_t>(ell)]; ++r) items.emplace_back(ell, r);
  std::vector<double> q_value(items.size(), 0.0);
  std::vector<long long> q_solves(items.size(), 0);

  parallel_for(items.size(), [&](std::size_t w) {
    const auto [ell, r] = items[w];
    Rng rng(seed, (static_cast<std::uint64_t>(ell) << 32) | static_cast<std::uint64_t>(r));
    const long long s_fine = plan.s[static_cast<std::size_t>(ell)];
    std::vector<double> shift(static_cast<std::size_t>(s_fine));
    for (auto& d : shift) d = rng.next_double();
    const FeMesh* coarse = ell > 0 ? &meshes[static_cast<std::size_t>(ell) - 1] : nullptr;
    const long long s_coarse = ell > 0 ? plan.s[static_cast<std::size_t>(ell) - 1] : 0;
    long long solves = 0;
    q_value[w] = level_replicate(field, meshes[static_cast<std::size_t>(ell)], coarse, s_fine,
                                 s_coarse, f, g, rules[static_cast<std::size_t>(ell)], shift, mode,
                                 &solves);
    q_solves[w] = solves;
  });

  std::size_t w = 0;
  KahanSum value, var_total;
  for (int ell = 0; ell <= L; ++ell) {
    LevelStats& ls = est.levels[static_cast<std::size_t>(ell)];
    ls.s = plan.s[static_cast<std::size_t>(ell)];
    ls.N = plan.N[static_cast<std::size_t>(ell)];
    ls.m = plan.m[static_cast<std::size_t>(ell)];
    KahanSum mean_acc;
    const std::size_t base = w;
    for (int r = 0; r < ls.m; ++r, ++w) {
      mean_acc.add(q_value[w]);
      ls.solves += q_solves[w];
    }
    ls.mean = mean_acc.value() / ls.m;
    KahanSum var_acc;
    for (int r = 0; r < ls.m; ++r) {
      const double dv = q_value[base + static_cast<std::size_t>(r)] - ls.mean;
      var_acc.add(dv * dv);
    }
    ls.variance = ls.m > 1 ? var_acc.value() / (ls.m - 1) : 0.0;
    ls.cost = static_cast<double>(ls.m) * static_cast<double>(ls.N) *
              cost_factor(plan.scenario, plan.h[static_cast<std::size_t>(ell)], plan.d, ls.s);
    value.add(ls.mean);
    var_total.add(ls.variance / ls.m);
    est.total_solves += ls.solves;
  }
  est.value = value.value();
  est.std_error = std::sqrt(var_total.value());
  est.cost_units = cost_model(plan);
  est.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return est;
}

MlEstimate sl_estimate(const FeMesh& mesh, const CoefficientField& field, const ScalarFn& f,
                       const ScalarFn& g, const LatticeRule& rule, int m, std::uint64_t seed,
                       AssemblyMode mode) {
  if (m < 1) throw std::invalid_argument("sl_estimate: m must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  MlEstimate est;
  est.seed = seed;
  est.levels.resize(1);
  std::vector<double> q_value(static_cast<std::size_t>(m), 0.0);
  std::vector<long long> q_solves(static_cast<std::size_t>(m), 0);
  parallel_for(static_cast<std::size_t>(m), [&](std::size_t r) {
    Rng rng(seed, static_cast<std::uint64_t>(r));
    std::vector<double> shift(static_cast<std::size_t>(rule.s));
    for (auto& d : shift) d = rng.next_double();
    long long solves = 0;
    q_value[r] = level_replicate(field, mesh, nullptr, rule.s, 0, f, g, rule, shift, mode, &solves);
    q_solves[r] = solves;
  });
  LevelStats& ls = est.levels[0];
  ls.s = rule.s;
  ls.N = rule.N;
  ls.m = m;
  KahanSum mean_acc;
  for (int r = 0; r < m; ++r) {
    mean_acc.add(q_value[static_cast<std::size_t>(r)]);
    ls.solves += q_solves[static_cast<std::size_t>(r)];
  }
  ls.mean = mean_acc.value() / m;
  KahanSum var_acc;
  for (int r = 0; r < m; ++r) {
    const double dv = q_value[static_cast<std::size_t>(r)] - ls.mean;
    var_acc.add(dv * dv);
  }
  ls.variance = m > 1 ? var_acc.value() / (m - 1) : 0.0;
  ls.cost = static_cast<double>(m) * static_cast<double>(rule.N) *
            std::pow(mesh.h(), -mesh.dim()) * static_cast<double>(rule.s);
  est.value = ls.mean;
  est.std_error = std::sqrt(ls.variance / m);
  est.total_solves = ls.solves;
  est.cost_units = ls.cost;
  est.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return est;
}

}  // namespace mlqmcfe
