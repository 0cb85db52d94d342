#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mlqmcfe/wavelet.hpp"

namespace mlqmcfe {

struct Domain {
  int dim = 1;
  double length = 1.0;  // 1D: [0, length]; 2D: unit square, length = 1
};

// Affine-parametric diffusion coefficient a(x,y) = abar(x) + sum_j y_j psi_j(x)
// with y_j in [-1/2, 1/2]. Families supply exact sup- and gradient norms; the
// derived sequences b_j, bbar_j, beta_j feed the QMC weights.
class CoefficientField {
 public:
  virtual ~CoefficientField() = default;

  const Domain& domain() const { return domain_; }
  double a_min() const { return a_min_; }
  double a_max() const { return a_max_; }
  double mean_value() const { return abar_; }  // abar is constant

  virtual long long capacity() const = 0;  // largest usable s
  virtual double fluctuation(long long j, const Pt& p) const = 0;  // psi_j, 1-based
  virtual double sup_norm(long long j) const = 0;
  virtual std::optional<double> grad_sup_norm(long long j) const = 0;
  virtual bool lipschitz_family() const = 0;  // whether W^{1,inf} norms exist
  // sup over x of sum_j |psi_j(x)| for j <= s (s < 0: whole family incl. tail)
  virtual double pointwise_fluctuation_bound(long long s) const = 0;
  virtual const WaveletBasis* multiresolution() const { return nullptr; }

  // a(x, y_{1:s}) with anchoring y_j = 0 beyond s = y.size(); validates
  // x in D and y in [-1/2,1/2]^s
  double evaluate(const Pt& p, std::span<const double> y) const;

  // randomized check of a_min <= a(x,y) <= a_max
  bool sample_bounds(int n_samples, std::uint64_t seed, long long s) const;

 protected:
  CoefficientField(Domain d, double abar, double a_min, double a_max);
  void validate_ellipticity() const;  // sufficient condition via norm sums

  Domain domain_;
  double abar_;
  double a_min_;
  double a_max_;
};

// psi_j(x) = c j^{-theta} sin(j pi x1) [* sin(j pi x2) in 2D] on the unit
// interval/square; theta > 1 so the norm sums converge.
class SineField : public CoefficientField {
 public:
  SineField(int dim, double c, double theta, double a_min, double a_max, double abar = 1.0);

  long long capacity() const override { return 1000000; }
  double fluctuation(long long j, const Pt& p) const override;
  double sup_norm(long long j) const override;
  std::optional<double> grad_sup_norm(long long j) const override;
  bool lipschitz_family() const override { return true; }
  double pointwise_fluctuation_bound(long long s) const override;

  double amplitude() const { return c_; }
  double decay_exponent() const { return theta_; }

 private:
  double c_;
  double theta_;
};

// Haar multiresolution field; flat index follows the basis level grouping.
class HaarField : public CoefficientField {
 public:
  HaarField(WaveletBasis basis, double a_min, double a_max, double abar = 1.0);

  long long capacity() const override { return basis_.total_count(); }
  double fluctuation(long long j, const Pt& p) const override;
  double sup_norm(long long j) const override;
  std::optional<double> grad_sup_norm(long long) const override { return std::nullopt; }
  bool lipschitz_family() const override { return false; }
  double pointwise_fluctuation_bound(long long s) const override;
  const WaveletBasis* multiresolution() const override { return &basis_; }

 private:
  WaveletBasis basis_;
};

struct DecaySequences {
  std::vector<double> b;      // ||psi_j|| / a_min
  std::vector<double> b_bar;  // b_j + kappa C_t (||grad psi_j|| + B ||psi_j||)
  std::vector<double> beta;   // max(bbar_j, b_j^{p/q})
  double p = 0.0, q = 0.0;
  double kappa = 1.0;
  double B_const = 0.0;
  double C_t = 1.0;
  bool gradient_terms_included = true;
};

// B_const < 0 requests the computable default
// (||grad abar|| + (1/2) sum_{j<=s_max} ||grad psi_j||) / a_min.
DecaySequences derive_sequences(const CoefficientField& field, double p, double q,
                                double kappa, double B_const, double C_t, long long s_max);

struct SummabilityReport {
  double sum_b_p = 0.0;
  double sum_bbar_q = 0.0;
  double sum_beta_q = 0.0;
  double sum_bbar = 0.0;          // plain sum, for the q = 1 smallness condition
  bool small_one_ok = true;       // sum bbar_j < sqrt(6) when q = 1 (else true)
  long long small_one_crossing = -1;  // first s where the partial sum exceeds sqrt(6)
  // analytic tail bounds when an algebraic envelope b_j <= c j^{-vartheta} is given
  double tail_b_p = 0.0;
  bool has_tail = false;
};

SummabilityReport summability_report(const DecaySequences& seqs, long long s_max,
                                     double envelope_c = -1.0, double envelope_theta = 0.0);

}  // namespace mlqmcfe
