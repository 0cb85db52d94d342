#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <vector>

#include "mlqmcfe/qmc.hpp"
#include "mlqmcfe/util.hpp"

using namespace mlqmcfe;

namespace {

double b2(double x) { return x * x - x + 1.0 / 6.0; }

// independent oracle: zeta by direct series with an integral tail correction
double zeta_series_oracle(double x, long long terms) {
  KahanSum s;
  for (long long k = 1; k <= terms; ++k) s.add(std::pow(static_cast<double>(k), -x));
  const double n = static_cast<double>(terms);
  return s.value() + std::pow(n, 1.0 - x) / (x - 1.0) - 0.5 * std::pow(n, -x);
}

// subset-enumeration worst-case error, written independently of the library
double wce_enumeration(const LatticeRule& rule, const PodWeights& w) {
  double total = 0.0;
  for (unsigned mask = 1; mask < (1u << rule.s); ++mask) {
    std::vector<int> u;
    for (int j = 0; j < rule.s; ++j)
      if (mask & (1u << j)) u.push_back(j + 1);
    double avg = 0.0;
    for (std::int64_t i = 1; i <= rule.N; ++i) {
      double prod = 1.0;
      for (int j : u) prod *= b2(static_cast<double>((i * rule.z[j - 1]) % rule.N) / rule.N);
      avg += prod;
    }
    total += w.weight(u) * avg / static_cast<double>(rule.N);
  }
  return total;
}

}  // namespace

TEST_SUITE("qmc") {

TEST_CASE("zeta matches the series oracle") {
  CHECK(riemann_zeta(2.0) ==
        doctest::Approx(std::numbers::pi * std::numbers::pi / 6.0).epsilon(1e-13));
  // oracle computed with 10^6 terms plus tail integral
  const double z15 = zeta_series_oracle(1.5, 1000000);
  CHECK(riemann_zeta(1.5) == doctest::Approx(z15).epsilon(1e-8));
  CHECK(riemann_zeta(1.5) == doctest::Approx(2.6123753486854883).epsilon(1e-12));
}

TEST_CASE("rho values and the divergent endpoint") {
  CHECK(rho(1.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  const double two_pi_sq = 2.0 * std::numbers::pi * std::numbers::pi;
  const double expected = 2.0 * zeta_series_oracle(1.5, 1000000) / std::pow(two_pi_sq, 0.75);
  CHECK(rho(0.75) == doctest::Approx(expected).epsilon(1e-8));
  CHECK_THROWS_AS(rho(0.5), std::invalid_argument);
  CHECK_THROWS_AS(rho(0.49), std::invalid_argument);
}

TEST_CASE("lambda_q piecewise values") {
  CHECK(lambda_q(1.0, 0.1) == 1.0);
  CHECK(lambda_q(0.8, 0.1) == doctest::Approx(0.8 / 1.2).epsilon(1e-15));
  CHECK(lambda_q(0.5, 0.1) == doctest::Approx(1.0 / 1.8).epsilon(1e-15));
  CHECK_THROWS_AS(lambda_q(0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(lambda_q(0.5, 0.6), std::invalid_argument);
}

TEST_CASE("pod weights reproduce the closed-form orders") {
  std::vector<double> beta = {0.5, 0.25, 0.125};
  const PodWeights w = pod_weights(beta, 1.0, 3);
  CHECK(w.log_order[0] == 0.0);  // gamma_empty = 1
  // order Gamma_1 = (4!/6)^{2/2} = 4, gamma_j = beta_j sqrt(6)
  std::vector<int> u1 = {2};
  CHECK(w.weight(u1) == doctest::Approx(4.0 * std::sqrt(6.0) * 0.25).epsilon(1e-13));
  std::vector<int> u2 = {1, 2};
  CHECK(w.weight(u2) == doctest::Approx(120.0 * 0.5 * 0.25).epsilon(1e-13));
}

TEST_CASE("order factors stay finite and monotone through order 4096") {
  std::vector<double> beta(4096, 0.5);
  const PodWeights w = pod_weights(beta, 0.75, 4096);
  for (int ell = 1; ell <= 4096; ++ell) {
    CHECK(std::isfinite(w.log_order[ell]));
    CHECK(w.log_order[ell] > w.log_order[ell - 1]);
  }
}

TEST_CASE("next_prime against a sieve oracle") {
  const int limit = 1100;
  std::vector<bool> composite(limit + 1, false);
  for (int i = 2; i * i <= limit; ++i)
    if (!composite[i])
      for (int j = i * i; j <= limit; j += i) composite[j] = true;
  auto sieve_next = [&](int n) {
    int k = n;
    while (composite[k]) ++k;
    return k;
  };
  CHECK(next_prime(8) == 11);
  CHECK(next_prime(7) == 7);
  CHECK(next_prime(1000) == sieve_next(1000));
  CHECK(next_prime(1000) == 1009);
}

TEST_CASE("lattice points at N=5, z=2, zero shift") {
  LatticeRule rule{1, 5, {2}};
  const auto pts = generate_points(rule, {});
  const std::vector<double> expect = {-0.1, 0.3, -0.3, 0.1, -0.5};
  REQUIRE(pts.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(pts[i][0] == doctest::Approx(expect[i]).epsilon(1e-15));
}

TEST_CASE("shift periodicity: Delta and Delta+1 coincide") {
  LatticeRule rule{2, 7, {1, 3}};
  std::vector<double> d0 = {0.3, 0.8};
  std::vector<double> d1 = {1.3, 1.8};
  const auto a = generate_points(rule, d0);
  const auto b = generate_points(rule, d1);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (int j = 0; j < 2; ++j) CHECK(a[i][j] == doctest::Approx(b[i][j]).epsilon(1e-14));
}

TEST_CASE("points lie in [-1/2, 1/2)") {
  std::vector<double> beta = {0.5, 0.3, 0.2};
  const PodWeights w = pod_weights(beta, 1.0, 3);
  const LatticeRule rule = cbc_construct(3, 17, w);
  std::vector<double> shift = {0.71, 0.13, 0.999};
  for (const auto& pt : generate_points(rule, shift))
    for (double v : pt) {
      CHECK(v >= -0.5);
      CHECK(v < 0.5);
    }
}

TEST_CASE("single-coordinate wce has the closed form gamma/(6 N^2)") {
  // Bernoulli multiplication oracle: sum_{k=0}^{N-1} B2(k/N) = 1/(6N)
  const std::int64_t N = 13;
  double direct = 0.0;
  for (std::int64_t k = 0; k < N; ++k) direct += b2(static_cast<double>(k) / N);
  CHECK(direct == doctest::Approx(1.0 / (6.0 * N)).epsilon(1e-13));

  std::vector<double> beta = {0.7};
  const PodWeights w = pod_weights(beta, 1.0, 1);
  LatticeRule rule{1, N, {5}};
  std::vector<int> u1 = {1};
  const double gamma_set = w.weight(u1);
  CHECK(shift_avg_wce(rule, w) ==
        doctest::Approx(gamma_set / (6.0 * static_cast<double>(N * N))).epsilon(1e-13));
}

TEST_CASE("zero product weights give zero error") {
  PodWeights w;
  w.lambda = 1.0;
  w.log_order = {0.0, std::log(4.0), std::log(20.0)};
  w.product = {0.0, 0.0};
  LatticeRule rule{2, 5, {1, 2}};
  CHECK(shift_avg_wce(rule, w) == 0.0);
}

TEST_CASE("accumulator equals subset enumeration at s=2, N=3, z=(1,1)") {
  std::vector<double> beta = {0.5, 0.25};
  const PodWeights w = pod_weights(beta, 1.0, 2);
  LatticeRule rule{2, 3, {1, 1}};
  const double direct = wce_enumeration(rule, w);
  CHECK(shift_avg_wce(rule, w) == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("cbc picks z=1 for the first component by permutation symmetry") {
  std::vector<double> beta = {0.5};
  const PodWeights w = pod_weights(beta, 1.0, 1);
  for (std::int64_t N : {5, 7, 11, 31}) {
    const LatticeRule rule = cbc_construct(1, N, w);
    CHECK(rule.z[0] == 1);
  }
}

TEST_CASE("cbc component choice attains the exhaustive minimum (s=2, N=5)") {
  std::vector<double> beta = {0.5, 0.25};
  const PodWeights w = pod_weights(beta, 1.0, 2);
  std::vector<double> steps;
  const LatticeRule rule = cbc_construct(2, 5, w, &steps);
  REQUIRE(steps.size() == 2);
  // brute force over the 4 candidates for z_2 with z_1 fixed to the chosen value
  double best = 1e300;
  for (std::int64_t cand = 1; cand <= 4; ++cand) {
    LatticeRule trial{2, 5, {rule.z[0], cand}};
    best = std::min(best, wce_enumeration(trial, w));
  }
  CHECK(steps[1] == doctest::Approx(best).epsilon(1e-13));
  CHECK(wce_enumeration(rule, w) == doctest::Approx(best).epsilon(1e-13));
}

TEST_CASE("cbc greedy optimality and coprimality for s<=3, small primes") {
  std::vector<double> beta = {0.6, 0.3, 0.15};
  const PodWeights w = pod_weights(beta, 0.75, 3);
  for (std::int64_t N : {5, 7, 11, 13, 31}) {
    std::vector<double> steps;
    const LatticeRule rule = cbc_construct(3, N, w, &steps);
    for (int d = 0; d < 3; ++d) {
      CHECK(std::gcd(rule.z[d], N) == 1);
      // exhaustive minimum over the d-th component, previous components fixed
      double best = 1e300;
      for (std::int64_t cand = 1; cand < N; ++cand) {
        LatticeRule trial{d + 1, N, {}};
        trial.z.assign(rule.z.begin(), rule.z.begin() + d);
        trial.z.push_back(cand);
        best = std::min(best, wce_enumeration(trial, w));
      }
      CHECK(steps[d] == doctest::Approx(best).epsilon(1e-12));
    }
  }
}

TEST_CASE("composite N rejected, lambda endpoint rejected") {
  std::vector<double> beta = {0.5};
  const PodWeights w = pod_weights(beta, 1.0, 1);
  CHECK_THROWS_AS(cbc_construct(1, 9, w), std::invalid_argument);
  CHECK_THROWS_AS(pod_weights(beta, 0.5, 1), std::invalid_argument);
}

TEST_CASE("generating vector serialization round trip") {
  LatticeRule rule{3, 17, {1, 5, 12}};
  double lambda = 0.0;
  const LatticeRule back = parse_rule(serialize_rule(rule, 0.75), &lambda);
  CHECK(back.s == rule.s);
  CHECK(back.N == rule.N);
  CHECK(back.z == rule.z);
  CHECK(lambda == doctest::Approx(0.75));
}

TEST_CASE("unbiasedness of the randomized rule on a separable polynomial") {
  // F(y) = prod (y_j + 1/2) integrates to (1/2)^s over [-1/2,1/2]^s
  const int s = 4;
  std::vector<double> beta = {0.5, 0.4, 0.3, 0.2};
  const PodWeights w = pod_weights(beta, 1.0, s);
  const LatticeRule rule = cbc_construct(s, 127, w);
  const int m = 10000;
  Rng rng(2024, 99);
  KahanSum sum, sumsq;
  std::vector<double> shift(s), y(s);
  for (int r = 0; r < m; ++r) {
    for (auto& d : shift) d = rng.next_double();
    KahanSum q;
    for (std::int64_t i = 1; i <= rule.N; ++i) {
      lattice_point(rule, i, shift, y);
      double f = 1.0;
      for (double v : y) f *= v + 0.5;
      q.add(f);
    }
    const double qv = q.value() / static_cast<double>(rule.N);
    sum.add(qv);
    sumsq.add(qv * qv);
  }
  const double mean = sum.value() / m;
  const double var = (sumsq.value() - m * mean * mean) / (m - 1);
  const double stderr_mean = std::sqrt(var / m);
  const double exact = std::pow(0.5, s);
  CHECK(std::abs(mean - exact) <= 4.0 * stderr_mean);
}

}  // TEST_SUITE
