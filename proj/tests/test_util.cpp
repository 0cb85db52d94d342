#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "mlqmcfe/util.hpp"

using namespace mlqmcfe;

TEST_SUITE("util") {

TEST_CASE("loglog fit recovers an exact power law") {
  std::vector<double> x, err;
  for (int i = 1; i <= 6; ++i) {
    x.push_back(std::pow(2.0, i));
    err.push_back(1.0 / x.back());
  }
  const auto fit = fit_loglog(x, err);
  CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(fit.max_residual < 1e-12);
}

TEST_CASE("loglog fit tolerates multiplicative noise") {
  // synthetic data oracle: err = 3 x^-2 with +-1% noise
  Rng rng(42);
  std::vector<double> x, err;
  for (int i = 0; i < 12; ++i) {
    x.push_back(std::pow(2.0, 1 + 0.5 * i));
    err.push_back(3.0 * std::pow(x.back(), -2.0) * (1.0 + 0.01 * (2.0 * rng.next_double() - 1.0)));
  }
  const auto fit = fit_loglog(x, err);
  CHECK(fit.slope == doctest::Approx(-2.0).epsilon(0.025));
}

TEST_CASE("loglog fit rejects degenerate input") {
  std::vector<double> two_x = {1.0, 2.0};
  std::vector<double> two_e = {1.0, 0.5};
  CHECK_THROWS_AS(fit_loglog(two_x, two_e), std::invalid_argument);
  std::vector<double> dup_x = {1.0, 2.0, 2.0};
  std::vector<double> dup_e = {1.0, 0.5, 0.25};
  CHECK_THROWS_AS(fit_loglog(dup_x, dup_e), std::invalid_argument);
  std::vector<double> bad_x = {1.0, 2.0, 4.0};
  std::vector<double> bad_e = {1.0, -0.5, 0.25};
  CHECK_THROWS_AS(fit_loglog(bad_x, bad_e), std::invalid_argument);
}

TEST_CASE("rng streams are deterministic and decorrelated") {
  Rng a(7, 3), b(7, 3), c(7, 4);
  const double va = a.next_double();
  CHECK(va == b.next_double());
  CHECK(va != c.next_double());
  Rng u(123, 0);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.next_double();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("parallel_for fills every slot once under any thread count") {
  std::vector<int> hits(1000, 0);
  setenv("MLQMCFE_THREADS", "3", 1);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += static_cast<int>(i) + 1; });
  unsetenv("MLQMCFE_THREADS");
  for (std::size_t i = 0; i < hits.size(); ++i) CHECK(hits[i] == static_cast<int>(i) + 1);
}

}  // TEST_SUITE
