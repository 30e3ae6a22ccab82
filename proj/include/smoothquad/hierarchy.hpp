#pragma once

// Hierarchical Gaussian coordinates: Brownian bridge construction, the
// smoothing-direction rotation of the coarse factors, and Haar indexing.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace smoothquad {

/// Uniform time grid shared by all assets.
class PathGrid {
 public:
  PathGrid(std::size_t steps, double horizon, std::size_t assets = 1);

  std::size_t steps() const noexcept { return steps_; }
  double horizon() const noexcept { return horizon_; }
  double dt() const noexcept { return dt_; }
  std::size_t assets() const noexcept { return assets_; }
  bool dyadic() const noexcept { return (steps_ & (steps_ - 1)) == 0; }

  /// Same horizon and asset count, `steps` replaced.
  PathGrid with_steps(std::size_t steps) const { return PathGrid(steps, horizon_, assets_); }

 private:
  std::size_t steps_;
  double horizon_;
  double dt_;
  std::size_t assets_;
};

/// Orthogonal map Y = A Z1 of the per-asset coarse factors. The first row
/// of A is the smoothing direction (1/sqrt(d), ..., 1/sqrt(d)).
struct RotationMatrix {
  Eigen::MatrixXd a;
  Eigen::MatrixXd a_inv;

  std::size_t size() const noexcept { return static_cast<std::size_t>(a.rows()); }
};

RotationMatrix build_rotation(std::size_t d);

/// Position of a fine bridge coordinate in the dyadic hierarchy. Level -1
/// denotes the global (terminal value) coordinate.
struct HaarLevelIndex {
  int n = -1;
  std::size_t k = 0;

  friend bool operator==(const HaarLevelIndex&, const HaarLevelIndex&) = default;
};

/// Level-major index of fine coordinate `i` (0-based, dyadic grids).
HaarLevelIndex haar_index(std::size_t fine_position);
std::size_t fine_position(HaarLevelIndex idx);

/// Brownian bridge on a fixed grid. Midpoints are filled by repeatedly
/// splitting the longest open interval (leftmost on ties), which is the
/// standard level-order Levy construction for dyadic N and a generalized
/// bisection otherwise.
class BrownianBridge {
 public:
  explicit BrownianBridge(const PathGrid& grid);

  std::size_t steps() const noexcept { return steps_; }

  /// Writes the N increments generated by the coarse coordinate and the
  /// N-1 fine coordinates (consumed in level order).
  void increments(double z_coarse, std::span<const double> z_fine, std::span<double> out) const;
  std::vector<double> increments(double z_coarse, std::span<const double> z_fine) const;

  /// Time support [t_left, t_right] (step units) influenced by fine coordinate i.
  std::pair<std::size_t, std::size_t> support(std::size_t fine_position) const;

 private:
  struct Split {
    std::size_t left, mid, right;
    double w_left, w_right, scale;
  };
  std::size_t steps_;
  double terminal_scale_;
  std::vector<Split> splits_;
};

std::vector<double> bridge_increments(const PathGrid& grid, double z_coarse,
                                      std::span<const double> z_fine);

/// (y1, Y_-1, Z_-1 per asset): the coordinates after rotating the coarse
/// factors; y1 is the smoothing coordinate.
struct HierarchicalCoords {
  double y1 = 0.0;
  std::vector<double> y_rest;
  std::vector<std::vector<double>> z_rest;

  std::size_t size() const;
};

/// `all` is asset-major: for asset j, entries [j*N, (j+1)*N) hold the
/// coarse coordinate followed by the N-1 fine coordinates in level order.
HierarchicalCoords split_coords(std::span<const double> all, const RotationMatrix& rot,
                                const PathGrid& grid);

/// Coarse block Z1 recovered from (y1, Y_-1) through A^-1.
std::vector<double> coarse_from_rotated(double y1, std::span<const double> y_rest,
                                        const RotationMatrix& rot);

}  // namespace smoothquad
