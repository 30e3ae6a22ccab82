#include "smoothquad/hierarchy.hpp"

#include "smoothquad/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace smoothquad {

PathGrid::PathGrid(std::size_t steps, double horizon, std::size_t assets)
    : steps_(steps), horizon_(horizon), dt_(horizon / static_cast<double>(steps)), assets_(assets) {
  if (steps == 0) throw ParameterError("PathGrid: number of time steps must be >= 1");
  if (assets == 0) throw ParameterError("PathGrid: number of assets must be >= 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw ParameterError("PathGrid: horizon must be positive and finite");
}

RotationMatrix build_rotation(std::size_t d) {
  if (d == 0) throw ParameterError("build_rotation: d must be >= 1");
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  a.row(0).setConstant(1.0 / std::sqrt(static_cast<double>(d)));

  // Gram-Schmidt over e_2..e_d, then e_1 if a candidate degenerates.
  std::vector<Eigen::Index> seeds;
  for (Eigen::Index i = 1; i < n; ++i) seeds.push_back(i);
  seeds.push_back(0);

  Eigen::Index filled = 1;
  for (Eigen::Index s : seeds) {
    if (filled == n) break;
    Eigen::VectorXd v = Eigen::VectorXd::Unit(n, s);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index r = 0; r < filled; ++r) v -= a.row(r).dot(v) * a.row(r).transpose();
    const double norm = v.norm();
    if (norm < 1e-10) continue;
    a.row(filled++) = v.transpose() / norm;
  }
  return RotationMatrix{a, a.transpose()};
}

HaarLevelIndex haar_index(std::size_t fine_position) {
  const std::size_t one_based = fine_position + 1;
  const int n = static_cast<int>(std::bit_width(one_based)) - 1;
  return {n, one_based - (std::size_t{1} << n)};
}

std::size_t fine_position(HaarLevelIndex idx) {
  if (idx.n < 0) throw ParameterError("fine_position: level -1 is the coarse coordinate");
  return (std::size_t{1} << idx.n) - 1 + idx.k;
}

BrownianBridge::BrownianBridge(const PathGrid& grid)
    : steps_(grid.steps()), terminal_scale_(std::sqrt(grid.horizon())) {
  const double dt = grid.dt();
  std::vector<std::pair<std::size_t, std::size_t>> open{{0, steps_}};
  splits_.reserve(steps_ - 1);
  while (!open.empty()) {
    // Longest interval first, leftmost on ties.
    auto it = std::max_element(open.begin(), open.end(), [](const auto& x, const auto& y) {
      const auto lx = x.second - x.first, ly = y.second - y.first;
      return lx < ly || (lx == ly && x.first > y.first);
    });
    const auto [l, r] = *it;
    open.erase(it);
    if (r - l < 2) continue;
    const std::size_t m = (l + r) / 2;
    const double len = static_cast<double>(r - l);
    const double left_len = static_cast<double>(m - l);
    const double right_len = static_cast<double>(r - m);
    splits_.push_back({l, m, r, right_len / len, left_len / len,
                       std::sqrt(left_len * right_len / len * dt)});
    open.emplace_back(l, m);
    open.emplace_back(m, r);
  }
}

void BrownianBridge::increments(double z_coarse, std::span<const double> z_fine,
                                std::span<double> out) const {
  if (z_fine.size() + 1 != steps_ || out.size() != steps_)
    throw InputShapeError("BrownianBridge: expected " + std::to_string(steps_ - 1) +
                          " fine coordinates and " + std::to_string(steps_) + " outputs");
  // Build W at grid nodes in `out` shifted by one: w[i] = W(t_i), w[0] = 0.
  thread_local std::vector<double> w;
  w.assign(steps_ + 1, 0.0);
  w[steps_] = terminal_scale_ * z_coarse;
  for (std::size_t i = 0; i < splits_.size(); ++i) {
    const auto& s = splits_[i];
    w[s.mid] = s.w_left * w[s.left] + s.w_right * w[s.right] + s.scale * z_fine[i];
  }
  for (std::size_t n = 0; n < steps_; ++n) out[n] = w[n + 1] - w[n];
}

std::vector<double> BrownianBridge::increments(double z_coarse,
                                               std::span<const double> z_fine) const {
  std::vector<double> out(steps_);
  increments(z_coarse, z_fine, out);
  return out;
}

std::pair<std::size_t, std::size_t> BrownianBridge::support(std::size_t fine_position) const {
  const auto& s = splits_.at(fine_position);
  return {s.left, s.right};
}

std::vector<double> bridge_increments(const PathGrid& grid, double z_coarse,
                                      std::span<const double> z_fine) {
  return BrownianBridge(grid).increments(z_coarse, z_fine);
}

std::size_t HierarchicalCoords::size() const {
  std::size_t n = 1 + y_rest.size();
  for (const auto& z : z_rest) n += z.size();
  return n;
}

HierarchicalCoords split_coords(std::span<const double> all, const RotationMatrix& rot,
                                const PathGrid& grid) {
  const std::size_t d = grid.assets();
  const std::size_t n = grid.steps();
  if (all.size() != d * n)
    throw InputShapeError("split_coords: expected " + std::to_string(d * n) + " coordinates, got " +
                          std::to_string(all.size()));
  if (rot.size() != d) throw InputShapeError("split_coords: rotation size does not match assets");

  Eigen::VectorXd coarse(static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) coarse[static_cast<Eigen::Index>(j)] = all[j * n];
  const Eigen::VectorXd y = rot.a * coarse;

  HierarchicalCoords out;
  out.y1 = y[0];
  out.y_rest.assign(y.data() + 1, y.data() + y.size());
  out.z_rest.resize(d);
  for (std::size_t j = 0; j < d; ++j)
    out.z_rest[j].assign(all.begin() + static_cast<std::ptrdiff_t>(j * n + 1),
                         all.begin() + static_cast<std::ptrdiff_t>((j + 1) * n));
  return out;
}

std::vector<double> coarse_from_rotated(double y1, std::span<const double> y_rest,
                                        const RotationMatrix& rot) {
  const auto d = static_cast<Eigen::Index>(rot.size());
  if (static_cast<Eigen::Index>(y_rest.size()) + 1 != d)
    throw InputShapeError("coarse_from_rotated: y_rest must have d-1 entries");
  Eigen::VectorXd y(d);
  y[0] = y1;
  for (Eigen::Index i = 1; i < d; ++i) y[i] = y_rest[static_cast<std::size_t>(i - 1)];
  const Eigen::VectorXd z = rot.a_inv * y;
  return {z.data(), z.data() + z.size()};
}

}  // namespace smoothquad
