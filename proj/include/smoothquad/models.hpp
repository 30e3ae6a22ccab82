#pragma once

// SDE dynamics and forward-Euler path maps for multivariate GBM and the
// Heston model under five variance schemes.

#include "smoothquad/hierarchy.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace smoothquad {

/// Counters for events that are legal but worth reporting.
struct PathDiagnostics {
  std::size_t negative_factors = 0;  // Euler factors (1 + ...) < 0
  std::size_t zero_variance_fallbacks = 0;
};

struct GbmSpec {
  std::vector<double> x0;
  std::vector<double> sigma;
  Eigen::MatrixXd corr;
  std::vector<double> drift;  // empty means zero

  std::size_t assets() const noexcept { return x0.size(); }

  /// Throws ParameterError on non-positive prices/volatilities or a
  /// correlation matrix that is not a unit-diagonal PSD matrix.
  void validate() const;
  /// Lower factor L with L L^T = corr (pivot-free, tolerates PSD).
  Eigen::MatrixXd correlation_factor() const;

  static GbmSpec single(double x0, double sigma, double drift = 0.0);
  static GbmSpec uniform(std::size_t d, double x0, double sigma, double rho);
};

/// Terminal values X0 * prod_n (1 + drift dt + sigma dW_n) per asset.
/// `increments` is d x N and already correlated.
std::vector<double> gbm_terminal(const GbmSpec& spec, const PathGrid& grid,
                                 const Eigen::MatrixXd& increments,
                                 PathDiagnostics* diag = nullptr);

enum class VolScheme { FullTruncation, PartialTruncation, Reflection, ABR, OUBased };

std::string to_string(VolScheme s);
VolScheme vol_scheme_from_string(const std::string& s);

struct HestonSpec {
  double s0 = 100.0;
  double v0 = 0.04;
  double mu = 0.0;
  double rho = 0.0;
  double kappa = 1.0;
  double theta = 0.04;
  double xi = 0.1;
  VolScheme scheme = VolScheme::FullTruncation;

  void validate() const;
};

struct OuParams {
  double alpha = 0.0;
  double beta = 0.0;
  double n_star = 0.0;
  int n_low = 0;
  double p = 0.0;

  static OuParams from(const HestonSpec& spec);
  double kappa() const { return -2.0 * alpha; }
  double xi() const { return 2.0 * beta; }
  double theta() const { return -n_star * beta * beta / (2.0 * alpha); }
};

struct HestonTerminal {
  double s;
  double v;
};

/// Number of independent volatility Brownian motions the scheme consumes
/// (n OU processes for OUBased, one otherwise).
std::size_t vol_factor_count(const HestonSpec& spec, std::optional<int> ou_processes = {});

/// Advances (S, V) over the grid. `dw_price` holds the N increments of the
/// Brownian motion independent of the variance, `dw_vol` the
/// vol_factor_count * N increments driving the variance (process-major).
HestonTerminal heston_terminal(const HestonSpec& spec, const PathGrid& grid,
                               std::span<const double> dw_price, std::span<const double> dw_vol,
                               std::optional<int> ou_processes = {},
                               PathDiagnostics* diag = nullptr);

/// One locally lognormal moment-matched variance step.
double abr_vol_step(const HestonSpec& spec, double v, double dw_v, double dt);

struct OuVolPath {
  std::vector<double> variance;      // Y at t_0..t_N
  std::vector<double> driving;       // dW~ per step (Brownian increment of the CIR form)
  std::vector<double> sqrt_v_dw;     // sum_i X^i dW^i = sqrt(Y) dW~ per step
};

/// Euler-discretized sum of n squared OU processes. `dw` is n x N
/// (process-major). X^1_0 = sqrt(v0), others start at 0.
OuVolPath ou_vol_path(const OuParams& params, const PathGrid& grid, std::span<const double> dw,
                      std::size_t n_processes, double v0, PathDiagnostics* diag = nullptr);

/// (1-p) * estimate(n_low) + p * estimate(n_low + 1) for non-integer n*;
/// a single call when n* is integer.
double ou_noninteger_price(const OuParams& params, const std::function<double(int)>& estimate);

/// Per-asset terminal values as functions of the smoothing coordinate:
/// X_j(y) = x0_j * prod_n (a_jn + b_jn * y).
struct ConditionalPath {
  std::size_t assets = 0;
  std::size_t steps = 0;
  std::vector<double> x0;
  std::vector<double> a;  // assets x steps, row-major
  std::vector<double> b;

  void resize(std::size_t d, std::size_t n);
  double terminal(std::size_t j, double y) const;
  /// Value and derivative d/dy of asset j's terminal value.
  std::pair<double, double> terminal_with_derivative(std::size_t j, double y) const;
};

/// A path map expressed over hierarchical Gaussian coordinates. Coordinate
/// 0 is always the smoothing coordinate y1; the remaining ones are
/// model-specific and passed to `conditional`.
class PathModel {
 public:
  virtual ~PathModel() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t assets() const = 0;
  virtual const PathGrid& grid() const = 0;
  virtual std::string describe() const = 0;
  /// `rest` has dim() - 1 entries.
  virtual void conditional(std::span<const double> rest, ConditionalPath& out,
                           PathDiagnostics* diag = nullptr) const = 0;
  /// Same model on a grid with a different step count.
  virtual std::unique_ptr<PathModel> with_steps(std::size_t steps) const = 0;
  /// Coordinates of with_steps(N / 2) describing the same Brownian path
  /// (dyadic N only): the bridge's coarser levels are a prefix of its finer
  /// ones, so this is a per-block truncation.
  virtual std::vector<double> coarsen(std::span<const double> coords) const;
};

/// Coordinates: [y1, Y_-1 (d-1), then per asset the N-1 fine bridge
/// coordinates]. Y = A Z1 with A from build_rotation(d).
class GbmPathModel final : public PathModel {
 public:
  GbmPathModel(GbmSpec spec, PathGrid grid);

  std::size_t dim() const override { return grid_.assets() * grid_.steps(); }
  std::size_t assets() const override { return grid_.assets(); }
  const PathGrid& grid() const override { return grid_; }
  std::string describe() const override;
  void conditional(std::span<const double> rest, ConditionalPath& out,
                   PathDiagnostics* diag = nullptr) const override;
  std::unique_ptr<PathModel> with_steps(std::size_t steps) const override;
  std::vector<double> coarsen(std::span<const double> coords) const override;

  const GbmSpec& spec() const noexcept { return spec_; }
  const RotationMatrix& rotation() const noexcept { return rot_; }

  /// Correlated d x N increments for a full coordinate vector (y1 first).
  Eigen::MatrixXd increments(std::span<const double> coords) const;

 private:
  GbmSpec spec_;
  PathGrid grid_;
  RotationMatrix rot_;
  Eigen::MatrixXd chol_;
  BrownianBridge bridge_;
};

/// Coordinates: [y1 = coarse factor of the price noise independent of the
/// variance, its N-1 fine coordinates, then for each variance factor a
/// block of N bridge coordinates (coarse, fine...)].
class HestonPathModel final : public PathModel {
 public:
  HestonPathModel(HestonSpec spec, PathGrid grid, std::optional<int> ou_processes = {});

  std::size_t dim() const override { return grid_.steps() * (1 + vol_factors_); }
  std::size_t assets() const override { return 1; }
  const PathGrid& grid() const override { return grid_; }
  std::string describe() const override;
  void conditional(std::span<const double> rest, ConditionalPath& out,
                   PathDiagnostics* diag = nullptr) const override;
  std::unique_ptr<PathModel> with_steps(std::size_t steps) const override;
  std::vector<double> coarsen(std::span<const double> coords) const override;

  const HestonSpec& spec() const noexcept { return spec_; }
  std::size_t vol_factors() const noexcept { return vol_factors_; }
  /// Explicit OU process count, when pinned by the caller.
  std::optional<int> ou_processes() const noexcept { return ou_processes_; }

  /// Brownian increments (price-independent, variance) for full coordinates.
  std::pair<std::vector<double>, std::vector<double>> increments(
      std::span<const double> coords) const;

 private:
  HestonSpec spec_;
  PathGrid grid_;
  std::optional<int> ou_processes_;
  std::size_t vol_factors_;
  BrownianBridge bridge_;
};

}  // namespace smoothquad
