#pragma once

// Monte Carlo and randomly shifted rank-1 lattice estimators over
// Gaussian-weighted integrands.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace smoothquad {

/// Error breakdown attached to priced estimates when it is known.
struct ErrorComponents {
  double bias = 0.0;        // discretization (weak) error
  double smoothing = 0.0;   // root finding + preintegration
  double quadrature = 0.0;  // ASGQ / statistical error
};

struct Estimate {
  double value = 0.0;
  /// 95% CI half-width (MC, rQMC) or the adaptive front residual (ASGQ).
  double stat_error = 0.0;
  std::size_t work = 0;
  std::optional<ErrorComponents> components;
  bool budget_exhausted = false;
};

/// Deterministic seed derivation: seed combined with a hash of `name`.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

struct McConfig {
  std::size_t n_samples = 100000;
  std::uint64_t seed = 42;
  std::size_t batch_size = 4096;
  std::size_t threads = 1;

  void validate() const;
};

using SampleFunction = std::function<double(std::span<const double>)>;

/// i.i.d. standard normal inputs; value is the sample mean and stat_error
/// 1.96 s / sqrt(n). Batches use independent derived streams, so the
/// result does not depend on the thread count.
Estimate mc_estimate(const SampleFunction& f, std::size_t dim, const McConfig& cfg);

/// Same estimator for two functions evaluated on common inputs; returns
/// estimates of f, g and f - g (the latter with its own CI).
struct CoupledEstimate {
  Estimate first;
  Estimate second;
  Estimate difference;
};
CoupledEstimate mc_coupled(const SampleFunction& f, const SampleFunction& g, std::size_t dim,
                           const McConfig& cfg);

/// Embedded CBC generating vector (see src/lattice_table.cpp).
std::span<const std::uint32_t> default_generating_vector();
/// Largest point count the embedded vector was optimised for.
std::size_t default_lattice_max_points();

struct LatticeConfig {
  std::size_t n_points = 1024;
  std::size_t n_shifts = 30;
  std::vector<std::uint32_t> generating_vector;  // empty: embedded table
  std::uint64_t seed = 42;
  std::size_t threads = 1;

  void validate(std::size_t dim) const;
};

Estimate rqmc_estimate(const SampleFunction& f, std::size_t dim, const LatticeConfig& cfg);

/// Standard normal quantile, relative error well below 1e-9 on (0, 1).
double inverse_normal_cdf(double u);
double normal_cdf(double x);

}  // namespace smoothquad
