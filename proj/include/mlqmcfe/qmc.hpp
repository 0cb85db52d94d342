#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mlqmcfe {

// Riemann zeta on (1, inf), series plus Euler-Maclaurin tail correction.
double riemann_zeta(double x);

// rho(lambda) = 2 zeta(2 lambda) / (2 pi^2)^lambda for lambda in (1/2, 1].
double rho(double lambda);

// lambda_q: 1/(2-2 delta) for q <= 2/3, q/(2-q) for q in (2/3,1), 1 at q = 1.
double lambda_q(double q, double delta);

// POD weights gamma_u = Gamma_{|u|} prod_{j in u} gamma_j with
// Gamma_ell = ((ell+3)!/6)^{2/(1+lambda)} and gamma_j = (beta_j / sqrt(rho))^{2/(1+lambda)}.
// Gamma is held in log scale; order factors stay finite up to order 4096.
struct PodWeights {
  double lambda = 1.0;
  std::vector<double> log_order;   // log Gamma_ell, ell = 0..order_cap
  std::vector<double> product;     // gamma_j, j = 1..s_max (stored 0-based)

  int dimension() const { return static_cast<int>(product.size()); }
  int order_cap() const { return static_cast<int>(log_order.size()) - 1; }
  double order_ratio(int ell) const;          // Gamma_ell / Gamma_{ell-1}
  double log_weight(std::span<const int> u) const;  // u holds 1-based indices
  double weight(std::span<const int> u) const;
};

PodWeights pod_weights(std::span<const double> beta, double lambda, int s_max);

struct LatticeRule {
  int s = 0;
  std::int64_t N = 0;  // prime
  std::vector<std::int64_t> z;  // 1 <= z_j <= N-1, gcd(z_j, N) = 1
};

bool is_prime(std::int64_t n);
std::int64_t next_prime(std::int64_t n);  // smallest prime >= n, n >= 2

// Component-by-component construction minimizing the shift-averaged squared
// worst-case error in the weighted unanchored space (kernel B2(x) = x^2-x+1/6).
// Ties resolve to the smallest candidate. per_step_error, when non-null,
// receives e^2 after each component.
LatticeRule cbc_construct(int s, std::int64_t N, const PodWeights& w,
                          std::vector<double>* per_step_error = nullptr);

// Shift-averaged squared worst-case error of a given rule under POD weights.
double shift_avg_wce(const LatticeRule& rule, const PodWeights& w);

// Point i (1-based) of the shifted rule: frac(i z / N + shift) - 1/2 per
// coordinate; the bare rule uses shift = 0.
void lattice_point(const LatticeRule& rule, std::int64_t i,
                   std::span<const double> shift, std::span<double> out);
std::vector<std::vector<double>> generate_points(const LatticeRule& rule,
                                                 std::span<const double> shift);

// Plain-text serialization: header "s N lambda", one z_j per line.
std::string serialize_rule(const LatticeRule& rule, double lambda);
LatticeRule parse_rule(const std::string& text, double* lambda_out = nullptr);

}  // namespace mlqmcfe
