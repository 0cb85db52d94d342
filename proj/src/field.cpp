#include "mlqmcfe/field.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mlqmcfe/util.hpp"

namespace mlqmcfe {

CoefficientField::CoefficientField(Domain d, double abar, double a_min, double a_max)
    : domain_(d), abar_(abar), a_min_(a_min), a_max_(a_max) {
  if (d.dim != 1 && d.dim != 2) throw std::invalid_argument("CoefficientField: dim must be 1 or 2");
  if (d.dim == 2 && d.length != 1.0)
    throw std::invalid_argument("CoefficientField: 2D domain is the unit square");
  if (!(a_min > 0.0) || !(a_max >= a_min))
    throw std::invalid_argument("CoefficientField: need 0 < a_min <= a_max");
}

void CoefficientField::validate_ellipticity() const {
  const double fluct = pointwise_fluctuation_bound(-1);
  if (abar_ - 0.5 * fluct < a_min_ - 1e-12)
    throw std::invalid_argument(
        "CoefficientField: ess-inf abar - (1/2) sup sum |psi_j| < a_min (uniform ellipticity "
        "cannot be guaranteed)");
  if (abar_ + 0.5 * fluct > a_max_ + 1e-12)
    throw std::invalid_argument("CoefficientField: a_max too small for the fluctuation budget");
}

double CoefficientField::evaluate(const Pt& p, std::span<const double> y) const {
  if (p.x < 0.0 || p.x > domain_.length || (domain_.dim == 2 && (p.y < 0.0 || p.y > 1.0)))
    throw std::invalid_argument("evaluate: point outside the domain");
  for (double yj : y)
    if (yj < -0.5 || yj > 0.5)
      throw std::invalid_argument("evaluate: parameter component outside [-1/2, 1/2]");
  KahanSum s;
  s.add(abar_);
  for (std::size_t j = 0; j < y.size(); ++j)
    if (y[j] != 0.0) s.add(y[j] * fluctuation(static_cast<long long>(j) + 1, p));
  return s.value();
}

bool CoefficientField::sample_bounds(int n_samples, std::uint64_t seed, long long s) const {
  Rng rng(seed, 0xf1e1d);
  std::vector<double> y(static_cast<std::size_t>(s));
  for (int it = 0; it < n_samples; ++it) {
    Pt p;
    p.x = rng.uniform(0.0, domain_.length);
    if (domain_.dim == 2) p.y = rng.next_double();
    for (auto& yj : y) yj = rng.uniform(-0.5, 0.5);
    const double a = evaluate(p, y);
    if (a < a_min_ - 1e-12 || a > a_max_ + 1e-12) return false;
  }
  return true;
}

SineField::SineField(int dim, double c, double theta, double a_min, double a_max, double abar)
    : CoefficientField(Domain{dim, 1.0}, abar, a_min, a_max), c_(c), theta_(theta) {
  if (!(c > 0.0)) throw std::invalid_argument("SineField: amplitude c must be positive");
  if (!(theta > 1.0)) throw std::invalid_argument("SineField: need theta > 1 for summable norms");
  validate_ellipticity();
}

double SineField::fluctuation(long long j, const Pt& p) const {
  const double amp = c_ * std::pow(static_cast<double>(j), -theta_);
  const double sx = std::sin(static_cast<double>(j) * std::numbers::pi * p.x);
  if (domain_.dim == 1) return amp * sx;
  return amp * sx * std::sin(static_cast<double>(j) * std::numbers::pi * p.y);
}

double SineField::sup_norm(long long j) const {
  return c_ * std::pow(static_cast<double>(j), -theta_);
}

std::optional<double> SineField::grad_sup_norm(long long j) const {
  return c_ * std::numbers::pi * std::pow(static_cast<double>(j), 1.0 - theta_);
}

double SineField::pointwise_fluctuation_bound(long long s) const {
  // sum_j c j^-theta, partial sum plus integral tail bound when s < 0
  const long long cut = s < 0 ? 4096 : s;
  KahanSum acc;
  for (long long j = 1; j <= cut; ++j) acc.add(sup_norm(j));
  double tail = 0.0;
  if (s < 0) tail = c_ * std::pow(static_cast<double>(cut), 1.0 - theta_) / (theta_ - 1.0);
  return acc.value() + tail;
}

HaarField::HaarField(WaveletBasis basis, double a_min, double a_max, double abar)
    : CoefficientField(Domain{basis.dim(), static_cast<double>(basis.domain_length())}, abar,
                       a_min, a_max),
      basis_(std::move(basis)) {
  validate_ellipticity();
}

double HaarField::fluctuation(long long j, const Pt& p) const {
  return basis_.evaluate_flat(j, p);
}

double HaarField::sup_norm(long long j) const {
  int n;
  long long m;
  basis_.level_location(j, &n, &m);
  return basis_.sup_norm(n);
}

double HaarField::pointwise_fluctuation_bound(long long s) const {
  // within a level at most one (1D) or three (2D) wavelets are nonzero at a point
  const int per_level = basis_.dim() == 1 ? 1 : 3;
  double total = 1.0;  // level 0 indicators
  for (int n = 1; n <= basis_.max_level(); ++n) {
    if (s >= 0 && basis_.flat_index(n, 0) > s) break;
    total += per_level * basis_.sup_norm(n);
  }
  return total;
}

DecaySequences derive_sequences(const CoefficientField& field, double p, double q, double kappa,
                                double B_const, double C_t, long long s_max) {
  if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("derive_sequences: p must lie in (0,1]");
  if (!(q >= p) || q > 1.0)
    throw std::invalid_argument("derive_sequences: q must lie in [p, 1]");
  if (!(kappa > 0.0) || kappa > 1.0)
    throw std::invalid_argument("derive_sequences: kappa must lie in (0,1]");
  if (s_max < 1 || s_max > field.capacity())
    throw std::invalid_argument("derive_sequences: s_max exceeds family capacity");

  DecaySequences out;
  out.p = p;
  out.q = q;
  out.kappa = kappa;
  out.C_t = C_t;

  const bool has_grads = field.grad_sup_norm(1).has_value();
  if (field.lipschitz_family() && !has_grads)
    throw std::invalid_argument(
        "derive_sequences: family claims W^{1,inf} regularity but gradient norms are missing");
  out.gradient_terms_included = has_grads;

  if (B_const < 0.0) {
    // computable upper bound for sup_y ||grad a(.,y)|| / a_min; abar is constant
    double gsum = 0.0;
    if (has_grads)
      for (long long j = 1; j <= s_max; ++j) gsum += *field.grad_sup_norm(j);
    out.B_const = 0.5 * gsum / field.a_min();
  } else {
    out.B_const = B_const;
  }

  const auto n = static_cast<std::size_t>(s_max);
  out.b.resize(n);
  out.b_bar.resize(n);
  out.beta.resize(n);
  for (long long j = 1; j <= s_max; ++j) {
    const double sup = field.sup_norm(j);
    const double bj = sup / field.a_min();
    double bbar = bj;
    if (has_grads)
      bbar += kappa * C_t * (*field.grad_sup_norm(j) + out.B_const * sup);
    out.b[static_cast<std::size_t>(j - 1)] = bj;
    out.b_bar[static_cast<std::size_t>(j - 1)] = bbar;
    out.beta[static_cast<std::size_t>(j - 1)] = std::max(bbar, std::pow(bj, p / q));
  }
  return out;
}

SummabilityReport summability_report(const DecaySequences& seqs, long long s_max,
                                     double envelope_c, double envelope_theta) {
  SummabilityReport rep;
  const long long n = std::min<long long>(s_max, static_cast<long long>(seqs.b.size()));
  KahanSum sbp, sbq, sBq, sb1;
  const double sqrt6 = std::sqrt(6.0);
  for (long long j = 0; j < n; ++j) {
    sbp.add(std::pow(seqs.b[static_cast<std::size_t>(j)], seqs.p));
    sbq.add(std::pow(seqs.b_bar[static_cast<std::size_t>(j)], seqs.q));
    sBq.add(std::pow(seqs.beta[static_cast<std::size_t>(j)], seqs.q));
    sb1.add(seqs.b_bar[static_cast<std::size_t>(j)]);
    if (rep.small_one_crossing < 0 && sb1.value() >= sqrt6) rep.small_one_crossing = j + 1;
  }
  rep.sum_b_p = sbp.value();
  rep.sum_bbar_q = sbq.value();
  rep.sum_beta_q = sBq.value();
  rep.sum_bbar = sb1.value();
  if (seqs.q == 1.0) rep.small_one_ok = rep.sum_bbar < sqrt6;
  if (envelope_c > 0.0 && envelope_theta * seqs.p > 1.0) {
    rep.has_tail = true;
    rep.tail_b_p = std::pow(envelope_c, seqs.p) *
                   std::pow(static_cast<double>(n), 1.0 - envelope_theta * seqs.p) /
                   (envelope_theta * seqs.p - 1.0);
  }
  return rep;
}

}  // namespace mlqmcfe
