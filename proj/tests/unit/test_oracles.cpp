// The oracles are checked against closed forms before anything else
// relies on them.

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using Catch::Matchers::WithinAbs;

TEST_CASE("simpson integrates polynomials and the Gaussian density", "[oracles]") {
  CHECK_THAT(oracle::adaptive_simpson([](double x) { return x * x * x; }, 0.0, 2.0), WithinAbs(4.0, 1e-12));
  CHECK_THAT(oracle::gaussian_expectation([](double) { return 1.0; }, {}), WithinAbs(1.0, 1e-12));
  CHECK_THAT(oracle::gaussian_expectation([](double y) { return y * y; }, {}), WithinAbs(1.0, 1e-11));
  CHECK_THAT(oracle::gaussian_expectation([](double y) { return y >= 0.3 ? 1.0 : 0.0; }, {0.3}),
             WithinAbs(1.0 - oracle::normal_cdf(0.3), 1e-12));
}

TEST_CASE("hermite oracle reproduces the closed-form small rules", "[oracles]") {
  const auto r2 = oracle::hermite_rule(2);
  REQUIRE(r2.nodes.size() == 2);
  CHECK_THAT(r2.nodes[1], WithinAbs(1.0, 1e-14));
  CHECK_THAT(r2.weights[0], WithinAbs(0.5, 1e-14));
  const auto r3 = oracle::hermite_rule(3);
  REQUIRE(r3.nodes.size() == 3);
  CHECK_THAT(r3.nodes[2], WithinAbs(std::sqrt(3.0), 1e-13));
  CHECK_THAT(r3.weights[1], WithinAbs(2.0 / 3.0, 1e-13));
  // Moment E[z^8] = 105 is exact with five points.
  CHECK_THAT(oracle::tensor_hermite([](const std::vector<double>& x) { return std::pow(x[0], 8); }, {5}),
             WithinAbs(105.0, 1e-10));
}

TEST_CASE("lognormal call oracle matches the Black-Scholes closed form", "[oracles]") {
  const double s = 0.4;
  const double d1 = 0.5 * s, d2 = -0.5 * s;
  const double bs = 100.0 * (oracle::normal_cdf(d1) - oracle::normal_cdf(d2));
  CHECK_THAT(oracle::lognormal_call(100.0, 100.0, 0.4, 1.0), WithinAbs(bs, 1e-9));
  CHECK_THAT(bs, WithinAbs(15.8519, 5e-5));
}

TEST_CASE("straight-line Euler loops", "[oracles]") {
  CHECK(oracle::euler_gbm(100.0, 0.4, 0.0, 1.0, {0.5}) == 120.0);
  const auto [s, v] = oracle::euler_heston({100, 0.04, 0, 0, 0, 0, 0}, 0, 0.5, {0.1, -0.1}, {0, 0});
  CHECK_THAT(s, WithinAbs(100.0 * 1.02 * 0.98, 1e-12));
  CHECK(v == 0.04);
}
