#include "smoothquad/errors.hpp"
#include "smoothquad/hierarchy.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace smoothquad;
using Catch::Matchers::WithinAbs;

TEST_CASE("rotation examples", "[hierarchy]") {
  const auto r1 = build_rotation(1);
  CHECK(r1.a(0, 0) == 1.0);

  const auto r2 = build_rotation(2);
  CHECK_THAT(r2.a(0, 0), WithinAbs(1.0 / std::sqrt(2.0), 1e-15));
  CHECK_THAT(r2.a(0, 1), WithinAbs(1.0 / std::sqrt(2.0), 1e-15));

  const auto r4 = build_rotation(4);
  for (int j = 0; j < 4; ++j) CHECK_THAT(r4.a(0, j), WithinAbs(0.5, 1e-15));
  CHECK((r4.a.transpose() * r4.a - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rotation is orthonormal for d = 1..20", "[hierarchy]") {
  for (std::size_t d = 1; d <= 20; ++d) {
    const auto r = build_rotation(d);
    const auto n = static_cast<Eigen::Index>(d);
    CHECK((r.a * r.a.transpose() - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((r.a_inv - r.a.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index j = 0; j < n; ++j)
      CHECK_THAT(r.a(0, j), WithinAbs(1.0 / std::sqrt(static_cast<double>(d)), 1e-12));
  }
  // Deterministic completion.
  CHECK(build_rotation(5).a == build_rotation(5).a);
}

TEST_CASE("bridge increments: closed-form cases", "[hierarchy]") {
  const PathGrid g4(4, 1.0);
  for (double w : bridge_increments(g4, 0.0, std::vector<double>(3, 0.0))) CHECK(w == 0.0);
  for (double w : bridge_increments(g4, 1.0, std::vector<double>(3, 0.0))) CHECK_THAT(w, WithinAbs(0.25, 1e-15));

  // N = 2: W(1/2) = a/2 + b/2 (bridge variance 1/4), so dW = (a/2 + b/2, a/2 - b/2).
  const PathGrid g2(2, 1.0);
  const auto inc = bridge_increments(g2, 0.8, std::vector<double>{0.6});
  CHECK_THAT(inc[0], WithinAbs(0.4 + 0.3, 1e-15));
  CHECK_THAT(inc[1], WithinAbs(0.4 - 0.3, 1e-15));

  // Sum of increments is sqrt(T) z_coarse whatever the fine coordinates.
  const PathGrid g8(8, 2.0);
  const auto inc8 = bridge_increments(g8, 1.3, std::vector<double>{0.1, -2, 0.5, 1, 1, -1, 0.3});
  double s = 0.0;
  for (double w : inc8) s += w;
  CHECK_THAT(s, WithinAbs(std::sqrt(2.0) * 1.3, 1e-14));

  CHECK_THROWS_AS(bridge_increments(g8, 0.0, std::vector<double>(3, 0.0)), InputShapeError);
}

TEST_CASE("bridge covariance equals diag(dt) for dyadic and non-dyadic grids", "[hierarchy]") {
  for (std::size_t n : {1, 2, 3, 5, 8, 12, 16}) {
    const PathGrid g(n, 1.7);
    const BrownianBridge br(g);
    // L column-wise: the image of each unit coordinate.
    Eigen::MatrixXd l(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t c = 0; c < n; ++c) {
      std::vector<double> fine(n - 1, 0.0);
      double coarse = 0.0;
      if (c == 0) coarse = 1.0; else fine[c - 1] = 1.0;
      const auto inc = br.increments(coarse, fine);
      for (std::size_t r = 0; r < n; ++r) l(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = inc[r];
    }
    const Eigen::MatrixXd cov = l * l.transpose();
    const Eigen::MatrixXd expected =
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) * g.dt();
    CHECK((cov - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("bridge N = 2 matches the sampled covariance of (W(1/2), W(1))", "[hierarchy]") {
  const PathGrid g(2, 1.0);
  const BrownianBridge br(g);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z;
  double s11 = 0, s12 = 0, s22 = 0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const auto inc = br.increments(z(rng), std::vector<double>{z(rng)});
    const double w1 = inc[0], w2 = inc[0] + inc[1];
    s11 += w1 * w1;
    s12 += w1 * w2;
    s22 += w2 * w2;
  }
  CHECK_THAT(s11 / n, WithinAbs(0.5, 5e-3));
  CHECK_THAT(s12 / n, WithinAbs(0.5, 5e-3));
  CHECK_THAT(s22 / n, WithinAbs(1.0, 5e-3));
}

TEST_CASE("fine coordinate (n, k) only moves increments inside its support", "[hierarchy]") {
  const std::size_t n = 16;
  const PathGrid g(n, 1.0);
  const BrownianBridge br(g);
  std::vector<double> base(n - 1, 0.3);
  const auto ref = br.increments(0.2, base);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto h = haar_index(i);
    const std::size_t width = n >> h.n;
    const std::size_t lo = h.k * width, hi = (h.k + 1) * width;
    CHECK(br.support(i) == std::pair{lo, hi});
    auto z = base;
    z[i] += 1.0;
    const auto inc = br.increments(0.2, z);
    for (std::size_t t = 0; t < n; ++t) {
      if (t >= lo && t < hi) continue;
      CHECK(inc[t] == ref[t]);
    }
  }
}

TEST_CASE("haar indexing is level-major", "[hierarchy]") {
  CHECK(haar_index(0) == HaarLevelIndex{0, 0});
  CHECK(haar_index(1) == HaarLevelIndex{1, 0});
  CHECK(haar_index(2) == HaarLevelIndex{1, 1});
  CHECK(haar_index(3) == HaarLevelIndex{2, 0});
  CHECK(haar_index(6) == HaarLevelIndex{2, 3});
  for (std::size_t i = 0; i < 63; ++i) CHECK(fine_position(haar_index(i)) == i);
  CHECK_THROWS_AS(fine_position({-1, 0}), ParameterError);
}

TEST_CASE("split_coords rotates the coarse block and round-trips", "[hierarchy]") {
  SECTION("d = 1") {
    const PathGrid g(4, 1.0, 1);
    const auto h = split_coords(std::vector<double>{0.7, 1, 2, 3}, build_rotation(1), g);
    CHECK(h.y1 == 0.7);
    CHECK(h.z_rest[0] == std::vector<double>{1, 2, 3});
    CHECK(h.size() == 4);
  }
  SECTION("d = 2, coarse (1, 1)") {
    const PathGrid g(2, 1.0, 2);
    const auto h = split_coords(std::vector<double>{1, 5, 1, 6}, build_rotation(2), g);
    CHECK_THAT(h.y1, WithinAbs(std::sqrt(2.0), 1e-15));
    CHECK_THAT(h.y_rest[0], WithinAbs(0.0, 1e-15));
    CHECK(h.z_rest[1] == std::vector<double>{6});
  }
  SECTION("d = 4, coarse e1") {
    const PathGrid g(1, 1.0, 4);
    const auto rot = build_rotation(4);
    const std::vector<double> all{1, 0, 0, 0};
    const auto h = split_coords(all, rot, g);
    CHECK_THAT(h.y1, WithinAbs(0.5, 1e-15));
    const auto back = coarse_from_rotated(h.y1, h.y_rest, rot);
    for (int j = 0; j < 4; ++j) CHECK_THAT(back[static_cast<std::size_t>(j)], WithinAbs(all[static_cast<std::size_t>(j)], 1e-12));
  }
  CHECK_THROWS_AS(split_coords(std::vector<double>(3), build_rotation(1), PathGrid(4, 1.0)), InputShapeError);
}

TEST_CASE("path grid validation", "[hierarchy]") {
  CHECK_THROWS_AS(PathGrid(0, 1.0), ParameterError);
  CHECK_THROWS_AS(PathGrid(4, 1.0, 0), ParameterError);
  CHECK_THROWS_AS(PathGrid(4, -1.0), ParameterError);
  const PathGrid g(3, 1.0);
  CHECK(std::abs(g.dt() * 3 - 1.0) < 4e-16);
  CHECK_FALSE(g.dyadic());
  CHECK(PathGrid(8, 1.0).dyadic());
}
