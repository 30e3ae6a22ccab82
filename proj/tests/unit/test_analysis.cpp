#include "oracles.hpp"

#include "smoothquad/analysis.hpp"
#include "smoothquad/errors.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace smoothquad;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

PricingPlan gbm_plan(const PayoffSpec& payoff, std::size_t steps) {
  PricingPlan p;
  p.model = std::make_shared<GbmPathModel>(GbmSpec::single(100.0, 0.4), PathGrid(steps, 1.0));
  p.payoff = payoff;
  return p;
}

}  // namespace

TEST_CASE("fit_slope on exact power laws and exponentials", "[analysis]") {
  const auto ll = fit_slope({1, 2, 4, 8}, {3.0, 3.0 * std::pow(2, -1.5), 3.0 * std::pow(4, -1.5), 3.0 * std::pow(8, -1.5)});
  CHECK_THAT(ll.slope, WithinAbs(-1.5, 1e-12));
  CHECK_THAT(ll.intercept, WithinAbs(std::log(3.0), 1e-12));
  CHECK_THAT(ll.r2, WithinAbs(1.0, 1e-12));
  CHECK(ll.reliable());

  const auto sl = fit_slope({1, 2, 3}, {std::exp(-0.7), std::exp(-1.4), std::exp(-2.1)}, FitKind::SemiLog);
  CHECK_THAT(sl.slope, WithinAbs(-0.7, 1e-12));

  // Non-positive metrics are skipped.
  const auto skip = fit_slope({1, 2, 4, 8}, {1.0, 0.0, 0.25, 0.125});
  CHECK_THAT(skip.slope, WithinAbs(-1.0, 1e-12));
  CHECK_THROWS_AS(fit_slope({1, 2}, {1.0, 0.0}), ParameterError);
  CHECK_THROWS_AS(fit_slope({1, 2, 3}, {1.0, 2.0}), InputShapeError);
}

TEST_CASE("decay probe on stubs with known derivatives", "[analysis]") {
  // Coordinate i sits on level i / 2 and carries weight 2^(-level / 2).
  std::vector<LevelledCoordinate> coords;
  for (std::size_t i = 0; i < 8; ++i) coords.push_back({i, static_cast<int>(i / 2)});
  const GaussianIntegrand linear = [](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < 8; ++i) s += std::pow(2.0, -0.5 * static_cast<double>(i / 2)) * x[i];
    return s;
  };
  const auto rep = derivative_decay_probe(linear, 8, coords, 16, 1);
  REQUIRE(rep.levels.size() == 4);
  for (std::size_t l = 0; l < 4; ++l)
    CHECK_THAT(rep.mean_abs_derivative[l], WithinRel(std::pow(2.0, -0.5 * static_cast<double>(l)), 1e-8));
  for (double r : rep.level_ratios) CHECK_THAT(r, WithinRel(std::sqrt(0.5), 1e-8));
  CHECK_THAT(rep.fitted_ratio, WithinRel(std::sqrt(0.5), 1e-8));

  const auto flat = derivative_decay_probe([](std::span<const double>) { return 4.0; }, 8, coords, 4, 1);
  for (double m : flat.mean_abs_derivative) CHECK(m < 1e-10);
  CHECK(flat.fitted_ratio == 0.0);

  CHECK_THROWS_AS(derivative_decay_probe(linear, 8, {{0, 0}, {1, 2}}, 4, 1), ParameterError);
  CHECK_THROWS_AS(derivative_decay_probe(linear, 8, {{9, 0}}, 4, 1), ParameterError);

  const auto study = to_study(rep);
  CHECK(study.kind == "decay-probe");
  CHECK(study.series[0].axis.size() == 4);
  CHECK(study.series[0].aux[0] == 0.0);
}

TEST_CASE("smoothed fine coordinates follow the coordinate layout", "[analysis]") {
  const GbmPathModel gbm(GbmSpec::uniform(2, 100.0, 0.3, 0.0), PathGrid(4, 1.0, 2));
  const auto c = smoothed_fine_coordinates(gbm);
  REQUIRE(c.size() == 6);
  CHECK(c[0].index == 1);  // after y1 removal: [Y_2, asset-1 fine (3), asset-2 fine (3)]
  CHECK(c[0].level == 0);
  CHECK(c[2].level == 1);
  CHECK(c[3].index == 4);
  CHECK_THROWS_AS(smoothed_fine_coordinates(GbmPathModel(GbmSpec::single(100, 0.4), PathGrid(6, 1.0))),
                  ParameterError);
}

TEST_CASE("mc statistical error decays like n^(-1/2)", "[analysis]") {
  auto plan = gbm_plan(make_digital(100.0), 4);
  plan.method = Method::MC;
  plan.integrand = IntegrandKind::Raw;
  plan.threads = 4;
  const auto r = statistical_error_study(plan, {1000, 4000, 16000, 64000});
  REQUIRE(r.series.size() == 1);
  REQUIRE(r.series[0].fit);
  CHECK_THAT(r.series[0].fit->slope, WithinAbs(-0.5, 0.05));
  CHECK(r.axis_name == "samples");
  // Same seed, same numbers.
  const auto again = statistical_error_study(plan, {1000, 4000, 16000, 64000});
  CHECK(again.series[0].metric == r.series[0].metric);
  plan.method = Method::ASGQ;
  CHECK_THROWS_AS(statistical_error_study(plan, {10, 20}), ParameterError);
}

TEST_CASE("weak error study", "[analysis]") {
  const double ref = black_scholes_call(100.0, 100.0, 0.4, 1.0);
  auto plan = gbm_plan(make_call(100.0), 4);
  plan.method = Method::MC;
  plan.integrand = IntegrandKind::Raw;
  plan.threads = 4;
  SECTION("uncoupled with a tiny sample is ci-dominated") {
    plan.mc.n_samples = 500;
    WeakErrorOptions opt;
    opt.ci_factor = 100.0;
    const auto r = weak_error_study(plan, {2, 4}, ref, opt);
    CHECK(r.has_flag("ci-dominated"));
    CHECK_FALSE(r.series[0].fit);
  }
  SECTION("exact coupling recovers first-order convergence") {
    plan.mc.n_samples = 200000;
    WeakErrorOptions opt;
    opt.couple_exact_gbm = true;
    const auto r = weak_error_study(plan, {4, 8, 16, 32}, ref, opt);
    REQUIRE(r.series[0].fit);
    CHECK(r.series[0].fit->slope > 0.7);
    CHECK(r.series[0].fit->slope < 1.3);
    CHECK(r.series[0].axis.front() < r.series[0].axis.back());  // ascending dt
  }
  CHECK_THROWS_AS(weak_error_study(plan, {4, 4}, ref), ParameterError);
}

TEST_CASE("quadrature study: smoothed beats raw on a one-dimensional digital", "[analysis]") {
  auto plan = gbm_plan(make_digital(100.0), 2);
  // Reference: the discrete two-step value by nested adaptive Simpson. The
  // N = 2 bridge gives dW = ((y + z) / 2, (y - z) / 2), so X >= 100 where
  // (1 + 0.2 y)^2 >= 1 + 0.04 z^2.
  const double ref = oracle::gaussian_expectation([](double z) {
    const double r = std::sqrt(1.0 + 0.04 * z * z);
    return oracle::gaussian_expectation([z](double y) {
      const double x = 100.0 * (1.0 + 0.2 * (y + z)) * (1.0 + 0.2 * (y - z));
      return x >= 100.0 ? 1.0 : 0.0;
    }, {(r - 1.0) / 0.2, (-r - 1.0) / 0.2}, 1e-12);
  }, {}, 1e-11);
  const auto r = quadrature_error_study(plan, {5, 10, 20, 40, 80}, ref);
  REQUIRE(r.series.size() == 2);
  const auto& s = r.at("smoothed");
  const auto& raw = r.at("raw");
  REQUIRE(!s.metric.empty());
  REQUIRE(!raw.metric.empty());
  CHECK(s.metric.back() < 1e-4);
  CHECK(s.metric.back() < raw.metric.back());
  for (std::size_t i = 0; i < s.aux.size(); ++i) CHECK(s.aux[i] <= s.axis[i]);
  CHECK_THROWS_AS(quadrature_error_study(plan, {10, 5}, ref), ParameterError);
}

TEST_CASE("mixed difference study", "[analysis]") {
  auto plan = gbm_plan(make_call(100.0), 4);
  const auto r = mixed_difference_study(plan, {0, 1, 2}, 4);
  REQUIRE(r.series.size() == 3);
  CHECK(r.series[0].label == "direction-0");
  CHECK(r.series[0].axis == std::vector<double>{1, 2, 3, 4});
  CHECK(r.series[2].aux[0] == 2.0);
  CHECK_THROWS_AS(mixed_difference_study(plan, {0}, 0), ParameterError);
}

TEST_CASE("smoothing parameter study", "[analysis]") {
  auto plan = gbm_plan(make_call(100.0), 4);
  plan.asgq.max_evaluations = 200;
  // Offsets stay below the first 128-point Laguerre node (about 0.011).
  const auto r = smoothing_parameter_study(plan, {16, 2, 4, 8, 32, 64}, {1e-4, 1e-8}, {1e-3, 2e-3, 4e-3});
  const auto& m = r.at("m_lag");
  CHECK(m.axis == std::vector<double>{2, 4, 8, 16, 32, 64});
  for (std::size_t i = 1; i < m.metric.size(); ++i) CHECK(m.metric[i] < m.metric[i - 1]);
  CHECK(m.metric.back() < 1e-8);
  const auto& off = r.at("root_offset");
  REQUIRE(off.fit);
  CHECK_THAT(off.fit->slope, WithinAbs(2.0, 0.2));  // a call loses O(delta^2)
  CHECK(r.at("tol_newton").metric.back() < 1e-8);
}
