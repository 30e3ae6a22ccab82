#include "oracles.hpp"

#include "smoothquad/errors.hpp"
#include "smoothquad/models.hpp"
#include "smoothquad/quadrature.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace smoothquad;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> v(n);
  for (double& x : v) x = z(rng);
  return v;
}

HestonSpec reference_heston(VolScheme s) {
  HestonSpec h;
  h.s0 = 100;
  h.v0 = 0.04;
  h.mu = 0;
  h.rho = -0.9;
  h.kappa = 1;
  h.theta = 0.0025;
  h.xi = 0.1;
  h.scheme = s;
  return h;
}

// E[f(z)] for z ~ N(0, 1) with a 64-point Hermite rule.
double hermite_mean(const std::function<double(double)>& f) {
  const auto& r = cached_rule(RuleFamily::Hermite, 64);
  double s = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) s += r.weights[k] * f(r.nodes[k]);
  return s;
}

}  // namespace

TEST_CASE("gbm_terminal examples", "[models]") {
  const auto spec = GbmSpec::single(100.0, 0.4);
  const PathGrid g1(1, 1.0);
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 1);
  CHECK(gbm_terminal(spec, g1, zero)[0] == 100.0);

  for (double z : {-1.5, 0.0, 0.3, 2.0}) {
    Eigen::MatrixXd inc(1, 1);
    inc(0, 0) = z;
    CHECK(gbm_terminal(spec, g1, inc)[0] == 100.0 * (1.0 + 0.4 * z));
  }

  const PathGrid g4(4, 1.0);
  const auto dw = normals(4, 11);
  Eigen::MatrixXd inc(1, 4);
  for (int i = 0; i < 4; ++i) inc(0, i) = dw[static_cast<std::size_t>(i)] * 0.5;
  std::vector<double> scaled(4);
  for (int i = 0; i < 4; ++i) scaled[static_cast<std::size_t>(i)] = inc(0, i);
  const auto drifted = GbmSpec::single(100.0, 0.4, 0.05);
  CHECK_THAT(gbm_terminal(drifted, g4, inc)[0],
             WithinRel(oracle::euler_gbm(100.0, 0.4, 0.05, 0.25, scaled), 1e-14));
}

TEST_CASE("negative Euler factors are legal and counted", "[models]") {
  const auto spec = GbmSpec::single(100.0, 0.4);
  Eigen::MatrixXd inc(1, 1);
  inc(0, 0) = -3.0;
  PathDiagnostics diag;
  CHECK(gbm_terminal(spec, PathGrid(1, 1.0), inc, &diag)[0] < 0.0);
  CHECK(diag.negative_factors == 1);
}

TEST_CASE("gbm spec validation", "[models]") {
  CHECK_THROWS_AS(GbmSpec::single(100.0, -0.4).validate(), ParameterError);
  CHECK_THROWS_AS(GbmSpec::single(-1.0, 0.4).validate(), ParameterError);
  auto bad = GbmSpec::uniform(2, 100, 0.4, 0.3);
  bad.corr(0, 1) = 1.5;
  bad.corr(1, 0) = 1.5;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  const auto ok = GbmSpec::uniform(4, 100, 0.4, 0.3);
  const auto l = ok.correlation_factor();
  CHECK((l * l.transpose() - ok.corr).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gbm path model: conditional path agrees with the full path map", "[models]") {
  for (std::size_t d : {1, 3}) {
    auto spec = GbmSpec::uniform(d, 100.0, 0.3, 0.4);
    spec.sigma.back() = 0.2;
    const GbmPathModel m(spec, PathGrid(8, 1.5, d));
    REQUIRE(m.dim() == 8 * d);
    const auto coords = normals(m.dim(), 3 + d);
    const auto x = gbm_terminal(spec, m.grid(), m.increments(coords));
    ConditionalPath cp;
    m.conditional(std::span<const double>(coords).subspan(1), cp);
    for (std::size_t j = 0; j < d; ++j) {
      CHECK_THAT(cp.terminal(j, coords[0]), WithinRel(x[j], 1e-12));
      // Analytic derivative against a central difference.
      const auto [v, dv] = cp.terminal_with_derivative(j, coords[0]);
      const double h = 1e-6;
      const double fd = (cp.terminal(j, coords[0] + h) - cp.terminal(j, coords[0] - h)) / (2 * h);
      CHECK_THAT(dv, WithinRel(fd, 1e-6));
      CHECK(v == cp.terminal(j, coords[0]));
    }
  }
}

TEST_CASE("gbm coarsen describes the same Brownian path on N / 2 steps", "[models]") {
  const auto spec = GbmSpec::uniform(2, 100.0, 0.3, 0.2);
  const GbmPathModel fine(spec, PathGrid(8, 1.0, 2));
  const auto coarse_model = fine.with_steps(4);
  const auto coords = normals(fine.dim(), 5);
  const auto wf = fine.increments(coords);
  const auto wc = dynamic_cast<const GbmPathModel&>(*coarse_model).increments(fine.coarsen(coords));
  for (int j = 0; j < 2; ++j)
    for (int t = 0; t < 4; ++t) CHECK_THAT(wc(j, t), WithinAbs(wf(j, 2 * t) + wf(j, 2 * t + 1), 1e-13));
  CHECK_THROWS_AS(GbmPathModel(spec, PathGrid(6, 1.0, 2)).coarsen(std::vector<double>(12)), ParameterError);
}

TEST_CASE("heston Euler schemes match the straight-line loop", "[models]") {
  const oracle::HestonParams p{100, 0.04, 0.02, -0.7, 2.0, 0.03, 0.6};
  const std::pair<VolScheme, int> schemes[] = {{VolScheme::FullTruncation, 0},
                                               {VolScheme::PartialTruncation, 1},
                                               {VolScheme::Reflection, 2}};
  const PathGrid g(16, 1.0);
  for (const auto& [scheme, id] : schemes) {
    HestonSpec h{p.s0, p.v0, p.mu, p.rho, p.kappa, p.theta, p.xi, scheme};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto dwp = normals(16, 100 + seed), dwv = normals(16, 200 + seed);
      for (double& w : dwp) w *= 0.25;
      for (double& w : dwv) w *= 0.25;
      const auto got = heston_terminal(h, g, dwp, dwv);
      const auto [s, v] = oracle::euler_heston(p, id, g.dt(), dwp, dwv);
      CHECK_THAT(got.s, WithinRel(s, 1e-12));
      CHECK_THAT(got.v, WithinAbs(v, 1e-14));
      CHECK(got.v >= 0.0);
    }
  }
}

TEST_CASE("heston with frozen variance reduces to gbm", "[models]") {
  for (auto scheme : {VolScheme::FullTruncation, VolScheme::PartialTruncation, VolScheme::Reflection,
                      VolScheme::ABR}) {
    HestonSpec h;
    h.v0 = 0.09;
    h.kappa = 0.0;
    h.xi = 0.0;
    h.theta = 0.09;
    h.rho = 0.5;
    h.scheme = scheme;
    const PathGrid g(8, 1.0);
    const auto dwp = normals(8, 1), dwv = normals(8, 2);
    std::vector<double> a(8), b(8), dws(8);
    for (int k = 0; k < 8; ++k) {
      a[static_cast<std::size_t>(k)] = dwp[static_cast<std::size_t>(k)] * std::sqrt(g.dt());
      b[static_cast<std::size_t>(k)] = dwv[static_cast<std::size_t>(k)] * std::sqrt(g.dt());
      dws[static_cast<std::size_t>(k)] = 0.5 * b[static_cast<std::size_t>(k)] + std::sqrt(0.75) * a[static_cast<std::size_t>(k)];
    }
    const auto got = heston_terminal(h, g, a, b);
    CHECK_THAT(got.v, WithinAbs(0.09, 1e-15));
    CHECK_THAT(got.s, WithinRel(oracle::euler_gbm(100.0, 0.3, 0.0, g.dt(), dws), 1e-12));
  }
}

TEST_CASE("ou parameters for the reference Heston set", "[models]") {
  const auto h = reference_heston(VolScheme::OUBased);
  const auto p = OuParams::from(h);
  CHECK_THAT(p.alpha, WithinAbs(-0.5, 1e-15));
  CHECK_THAT(p.beta, WithinAbs(0.05, 1e-15));
  CHECK_THAT(p.n_star, WithinAbs(1.0, 1e-12));
  CHECK(p.n_low == 1);
  CHECK(p.p == 0.0);
  CHECK_THAT(p.kappa(), WithinAbs(h.kappa, 1e-12));
  CHECK_THAT(p.xi(), WithinAbs(h.xi, 1e-12));
  CHECK_THAT(p.theta(), WithinAbs(h.theta, 1e-12));
  CHECK(vol_factor_count(h) == 1);

  auto degenerate = h;
  degenerate.xi = 0.0;
  CHECK_THROWS_AS(OuParams::from(degenerate), ParameterError);
  auto bad_rho = h;
  bad_rho.rho = 1.0;
  CHECK_THROWS_AS(bad_rho.validate(), ParameterError);
}

TEST_CASE("ou variance path", "[models]") {
  const PathGrid g(8, 1.0);
  SECTION("alpha = beta = 0 keeps Y at v0") {
    OuParams p;
    const auto path = ou_vol_path(p, g, normals(16, 3), 2, 0.04);
    for (double y : path.variance) CHECK_THAT(y, WithinAbs(0.04, 1e-15));
  }
  SECTION("Y is a sum of squares and the driving increment is sqrt(Y)-normalized") {
    const auto p = OuParams::from(reference_heston(VolScheme::OUBased));
    auto dw = normals(16, 9);
    for (double& w : dw) w *= std::sqrt(g.dt());
    const auto path = ou_vol_path(p, g, dw, 2, 0.04);
    for (std::size_t k = 0; k < 8; ++k) {
      CHECK(path.variance[k] >= 0.0);
      CHECK_THAT(path.driving[k] * std::sqrt(path.variance[k]), WithinAbs(path.sqrt_v_dw[k], 1e-15));
    }
  }
  SECTION("zero variance falls back to the first process increment") {
    OuParams p;
    PathDiagnostics diag;
    const std::vector<double> dw{0.1, -0.2};
    const auto path = ou_vol_path(p, PathGrid(2, 1.0), dw, 1, 0.0, &diag);
    CHECK(path.driving == dw);
    CHECK(diag.zero_variance_fallbacks == 2);
  }
}

TEST_CASE("ou variance mean matches the CIR mean", "[models]") {
  // E[Y_T] = theta + (v0 - theta) e^{-kappa T} for the Euler OU sum at small dt.
  const auto h = reference_heston(VolScheme::OUBased);
  const auto p = OuParams::from(h);
  const std::size_t n = 512, paths = 1000000;
  const double dt = 1.0 / n, sdt = std::sqrt(dt);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z;
  double s = 0.0, s2 = 0.0, min_y = 1.0;
  for (std::size_t i = 0; i < paths; ++i) {
    double x = std::sqrt(h.v0);
    for (std::size_t k = 0; k < n; ++k) x += p.alpha * x * dt + p.beta * sdt * z(rng);
    const double y = x * x;
    s += y;
    s2 += y * y;
    min_y = std::min(min_y, y);
  }
  const double mean = s / paths;
  const double se = std::sqrt((s2 / paths - mean * mean) / paths);
  const double cir = h.theta + (h.v0 - h.theta) * std::exp(-h.kappa);
  CHECK(std::abs(mean - cir) < 3.0 * se + 1e-4 * cir);  // + O(dt) Euler bias
  CHECK(min_y >= 0.0);

  // The library path agrees with this loop on the same increments.
  std::vector<double> dw(64);
  for (double& w : dw) w = z(rng) * std::sqrt(1.0 / 64);
  double x = std::sqrt(h.v0);
  for (double w : dw) x += p.alpha * x / 64.0 + p.beta * w;
  CHECK_THAT(ou_vol_path(p, PathGrid(64, 1.0), dw, 1, h.v0).variance.back(), WithinRel(x * x, 1e-13));
}

TEST_CASE("ou non-integer interpolation", "[models]") {
  OuParams p;
  p.n_low = 1;
  p.p = 0.0;
  int calls = 0;
  CHECK(ou_noninteger_price(p, [&](int n) { ++calls; return 10.0 * n; }) == 10.0);
  CHECK(calls == 1);
  p.p = 0.5;
  CHECK(ou_noninteger_price(p, [](int n) { return n == 1 ? 2.0 : 4.0; }) == 3.0);
  // Exact for estimates affine in n.
  p.n_low = 3;
  p.p = 0.3;
  CHECK_THAT(ou_noninteger_price(p, [](int n) { return 1.5 + 0.25 * n; }), WithinAbs(1.5 + 0.25 * 3.3, 1e-14));
}

TEST_CASE("ABR step: moments match their analytic targets", "[models]") {
  HestonSpec h = reference_heston(VolScheme::ABR);
  h.xi = 0.5;
  const double dt = 0.125;
  for (double v : {0.0025, 0.04, 0.2}) {
    const double decay = std::exp(-h.kappa * dt);
    const double cir_mean = h.theta + (v - h.theta) * decay;
    const double sd = std::sqrt(dt);
    const double m1 = hermite_mean([&](double z) { return abr_vol_step(h, v, sd * z, dt); });
    const double m2 = hermite_mean([&](double z) {
      const double x = abr_vol_step(h, v, sd * z, dt);
      return x * x;
    });
    CHECK_THAT(m1, WithinRel(cir_mean, 1e-12));
    const double target_var = 0.5 * h.xi * h.xi * v * (1.0 - std::exp(-2.0 * h.kappa * dt)) / h.kappa;
    CHECK_THAT(m2 - m1 * m1, WithinRel(target_var, 1e-10));
  }
  HestonSpec frozen = h;
  frozen.xi = 0.0;
  CHECK_THAT(abr_vol_step(frozen, 0.04, 1.7, dt),
             WithinRel(0.04 * std::exp(-dt) + (1 - std::exp(-dt)) * h.theta, 1e-15));
  HestonSpec zero = h;
  zero.theta = 0.0;
  CHECK(abr_vol_step(zero, 0.0, 0.3, dt) == 0.0);
}

TEST_CASE("heston path model: conditional path agrees with the full path map", "[models]") {
  for (auto scheme : {VolScheme::FullTruncation, VolScheme::ABR, VolScheme::OUBased}) {
    const auto h = reference_heston(scheme);
    const HestonPathModel m(h, PathGrid(8, 1.0), scheme == VolScheme::OUBased ? std::optional<int>(2) : std::nullopt);
    const auto coords = normals(m.dim(), 17);
    const auto [dwp, dwv] = m.increments(coords);
    const auto x = heston_terminal(h, m.grid(), dwp, dwv, m.ou_processes());
    ConditionalPath cp;
    m.conditional(std::span<const double>(coords).subspan(1), cp);
    CHECK_THAT(cp.terminal(0, coords[0]), WithinRel(x.s, 1e-12));

    const auto coarse = m.with_steps(4);
    const auto [cwp, cwv] = dynamic_cast<const HestonPathModel&>(*coarse).increments(m.coarsen(coords));
    for (int t = 0; t < 4; ++t) {
      CHECK_THAT(cwp[static_cast<std::size_t>(t)], WithinAbs(dwp[static_cast<std::size_t>(2 * t)] + dwp[static_cast<std::size_t>(2 * t + 1)], 1e-13));
      CHECK_THAT(cwv[static_cast<std::size_t>(t)], WithinAbs(dwv[static_cast<std::size_t>(2 * t)] + dwv[static_cast<std::size_t>(2 * t + 1)], 1e-13));
    }
  }
}

TEST_CASE("full truncation and reflection never feed negative variance", "[models]") {
  HestonSpec h = reference_heston(VolScheme::FullTruncation);
  h.xi = 1.5;  // far from Feller, so the raw Euler variance goes negative often
  const PathGrid g(16, 1.0);
  for (auto scheme : {VolScheme::FullTruncation, VolScheme::Reflection}) {
    h.scheme = scheme;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      auto dwv = normals(16, seed);
      for (double& w : dwv) w *= 0.25;
      const auto r = heston_terminal(h, g, std::vector<double>(16, 0.0), dwv);
      CHECK(r.v >= 0.0);
      CHECK(std::isfinite(r.s));
    }
  }
}
