#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "mlqmcfe/field.hpp"
#include "mlqmcfe/util.hpp"

using namespace mlqmcfe;

namespace {

WaveletBasis haar1d(int a, double c, double theta, int max_level) {
  return WaveletBasis(1, a, [=](int n) { return c * std::exp2(-theta * n); }, max_level);
}

}  // namespace

TEST_SUITE("field") {

TEST_CASE("anchoring at zero returns the mean field") {
  const SineField f(1, 0.2, 2.0, 0.5, 1.5);
  std::vector<double> y(5, 0.0);
  for (double x : {0.1, 0.37, 0.99}) CHECK(f.evaluate(Pt{x, 0.0}, y) == doctest::Approx(1.0));
}

TEST_CASE("haar evaluation: level-0 indicator adds its coordinate") {
  const HaarField f(haar1d(2, 0.3, 1.0, 6), 0.3, 1.7);
  std::vector<double> y = {0.3, 0.0};
  // psi_1 is the indicator of [0,1)
  CHECK(f.evaluate(Pt{0.5, 0.0}, y) == doctest::Approx(1.3));
  CHECK(f.evaluate(Pt{1.5, 0.0}, y) == doctest::Approx(1.0));
}

TEST_CASE("sine evaluation by direct substitution") {
  const SineField f(1, 0.2, 2.0, 0.5, 1.5);
  std::vector<double> y = {0.5};
  CHECK(f.evaluate(Pt{0.5, 0.0}, y) ==
        doctest::Approx(1.0 + 0.1 * std::sin(std::numbers::pi / 2.0)));
}

TEST_CASE("rejects out-of-range parameters and points") {
  const SineField f(1, 0.2, 2.0, 0.5, 1.5);
  std::vector<double> bad = {0.6};
  CHECK_THROWS_AS(f.evaluate(Pt{0.5, 0.0}, bad), std::invalid_argument);
  std::vector<double> ok = {0.4};
  CHECK_THROWS_AS(f.evaluate(Pt{1.5, 0.0}, ok), std::invalid_argument);
}

TEST_CASE("coefficient stays within [a_min, a_max] on random samples") {
  const SineField sine(1, 0.5, 2.0, 1.0 - 0.5 * 0.5 * 1.7, 1.0 + 0.5 * 0.5 * 1.7);
  CHECK(sine.sample_bounds(2000, 7, 16));
  const HaarField haar(haar1d(2, 0.3, 1.0, 8), 0.35, 1.65);
  CHECK(haar.sample_bounds(2000, 7, 32));
}

TEST_CASE("ellipticity guard rejects overdrawn fluctuation budgets") {
  CHECK_THROWS_AS(SineField(1, 2.0, 1.5, 0.2, 5.0), std::invalid_argument);
}

TEST_CASE("affine dependence in each coordinate is exact") {
  const SineField f(1, 0.4, 2.0, 0.4, 1.6);
  Rng rng(11);
  std::vector<double> y(6);
  for (int rep = 0; rep < 20; ++rep) {
    for (auto& v : y) v = rng.uniform(-0.4, 0.4);
    const Pt x{rng.next_double(), 0.0};
    const std::size_t j = rep % y.size();
    const double t = 0.05;
    auto y2 = y;
    y2[j] += t;
    const double lhs = f.evaluate(x, y2) - f.evaluate(x, y);
    CHECK(lhs == doctest::Approx(t * f.fluctuation(static_cast<long long>(j) + 1, x)).epsilon(1e-12));
  }
}

TEST_CASE("derived sequences: b_j is the normalized sup norm") {
  // indicators with ||psi_j|| = c_j and a_min = 2 -> b_j = c_j / 2
  const HaarField f(haar1d(2, 0.5, 1.0, 5), 2.0, 4.0, 3.0);
  const auto seqs = derive_sequences(f, 0.5, 0.5, 1.0, -1.0, 1.0, 10);
  CHECK(seqs.b[0] == doctest::Approx(0.5));          // level-0 indicator, norm 1
  CHECK(seqs.b[2] == doctest::Approx(0.25 / 2.0));   // first level-1 entry, norm c/2
  CHECK_FALSE(seqs.gradient_terms_included);
  for (std::size_t j = 0; j < seqs.b.size(); ++j) CHECK(seqs.b_bar[j] == seqs.b[j]);
}

TEST_CASE("degenerate parameters collapse bbar to b and beta to b") {
  // kappa = 1, C_t = 1, B = 0, zero-gradient family, p = q
  const HaarField f(haar1d(2, 0.3, 1.0, 5), 0.35, 1.65);
  const auto seqs = derive_sequences(f, 0.5, 0.5, 1.0, 0.0, 1.0, 8);
  for (std::size_t j = 0; j < seqs.b.size(); ++j) {
    CHECK(seqs.b_bar[j] == seqs.b[j]);
    CHECK(seqs.beta[j] == doctest::Approx(std::max(seqs.b[j], seqs.b[j])));
  }
}

TEST_CASE("hand-substitution oracle for bbar_2 of the sine family") {
  // c = 0.2, theta = 2, a_min = 0.8, kappa = 0.5, C_t = 1, B = 0.25, j = 2:
  // b_2 = (0.2/4)/0.8, grad norm = 0.2/4 * 2 pi = 0.1 pi
  const SineField f(1, 0.2, 2.0, 0.8, 1.2);
  const auto seqs = derive_sequences(f, 0.5, 0.5, 0.5, 0.25, 1.0, 4);
  const double b2 = 0.05 / 0.8;
  const double bbar2 = b2 + 0.5 * 1.0 * (0.1 * std::numbers::pi + 0.25 * 0.05);
  CHECK(seqs.b[1] == doctest::Approx(b2).epsilon(1e-15));
  CHECK(seqs.b_bar[1] == doctest::Approx(bbar2).epsilon(1e-14));
  CHECK(bbar2 == doctest::Approx(0.2258).epsilon(1e-3));
}

TEST_CASE("bbar is monotone in kappa and beta dominates bbar") {
  const SineField f(1, 0.3, 2.5, 0.6, 1.4);
  const auto lo = derive_sequences(f, 0.4, 0.6, 0.25, -1.0, 1.0, 32);
  const auto hi = derive_sequences(f, 0.4, 0.6, 1.0, -1.0, 1.0, 32);
  for (std::size_t j = 0; j < lo.b.size(); ++j) {
    CHECK(hi.b_bar[j] >= lo.b_bar[j]);
    CHECK(lo.b_bar[j] >= lo.b[j]);
    CHECK(lo.beta[j] >= lo.b_bar[j]);
    CHECK(lo.beta[j] >= std::pow(lo.b[j], lo.p / lo.q));
    const bool attained = lo.beta[j] == lo.b_bar[j] ||
                          lo.beta[j] == doctest::Approx(std::pow(lo.b[j], lo.p / lo.q));
    CHECK(attained);
  }
}

TEST_CASE("derive_sequences validates p <= q") {
  const SineField f(1, 0.2, 2.0, 0.5, 1.5);
  CHECK_THROWS_AS(derive_sequences(f, 0.7, 0.5, 1.0, -1.0, 1.0, 4), std::invalid_argument);
}

TEST_CASE("summability report: partial sum of j^{-1.2} matches brute force") {
  // b_j = j^-2 with p = 0.6 sums j^{-1.2}; direct-summation oracle
  const long long smax = 10000;
  DecaySequences seqs;
  seqs.p = 0.6;
  seqs.q = 0.8;
  for (long long j = 1; j <= smax; ++j) {
    const double bj = std::pow(static_cast<double>(j), -2.0);
    seqs.b.push_back(bj);
    seqs.b_bar.push_back(bj);
    seqs.beta.push_back(bj);
  }
  const auto rep = summability_report(seqs, smax, 1.0, 2.0);
  KahanSum oracle;
  for (long long j = 1; j <= smax; ++j) oracle.add(std::pow(static_cast<double>(j), -1.2));
  CHECK(rep.sum_b_p == doctest::Approx(oracle.value()).epsilon(1e-12));
  CHECK(rep.sum_b_p == doctest::Approx(5.244).epsilon(2e-3));
  CHECK(rep.has_tail);
  // analytic tail bound dominates the true remainder zeta(1.2) - partial
  CHECK(rep.tail_b_p >= 5.59158 - rep.sum_b_p - 1e-6);
}

TEST_CASE("zero fluctuations give zero sums and pass every check") {
  DecaySequences z;
  z.b.assign(16, 0.0);
  z.b_bar.assign(16, 0.0);
  z.beta.assign(16, 0.0);
  z.p = 0.5;
  z.q = 1.0;
  const auto rep = summability_report(z, 16);
  CHECK(rep.sum_b_p == 0.0);
  CHECK(rep.sum_bbar_q == 0.0);
  CHECK(rep.small_one_ok);
  CHECK(rep.small_one_crossing == -1);
}

TEST_CASE("q = 1 smallness flag raised where the harmonic sum crosses sqrt(6)") {
  DecaySequences h;
  h.p = 0.9;
  h.q = 1.0;
  for (int j = 1; j <= 64; ++j) {
    h.b.push_back(1.0 / j);
    h.b_bar.push_back(1.0 / j);
    h.beta.push_back(1.0 / j);
  }
  const auto rep = summability_report(h, 64);
  CHECK_FALSE(rep.small_one_ok);
  // harmonic partial-sum oracle
  double sum = 0.0;
  long long crossing = -1;
  for (int j = 1; j <= 64; ++j) {
    sum += 1.0 / j;
    if (sum >= std::sqrt(6.0)) {
      crossing = j;
      break;
    }
  }
  CHECK(rep.small_one_crossing == crossing);
}

}  // TEST_SUITE
