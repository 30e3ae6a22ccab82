#pragma once

// Numerical smoothing: locate the kink/jump of the payoff along y1 by
// root finding, then integrate y1 out with Gauss-Laguerre tails (and
// Gauss-Legendre between multiple roots).

#include "smoothquad/models.hpp"
#include "smoothquad/payoffs.hpp"

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace smoothquad {

struct SmoothingConfig {
  std::size_t m_lag = 32;           // Laguerre points per tail
  double tol_newton = 1e-10;        // residual tolerance |P(y*)|
  std::size_t max_newton_iters = 100;
  double bracket_halfwidth = 10.0;  // in units of y1 (a standard normal)
  std::size_t multi_root_scan_points = 64;
  std::size_t m_leg = 16;           // Legendre points per interior interval
  /// Roots beyond this |y| are treated as lying at infinity.
  double far_root = 8.0;
  /// Interior intervals narrower than this are merged away.
  double min_interval = 1e-6;
  /// Shift applied to every located root; non-zero only in sensitivity
  /// studies of the root-finding error.
  double root_offset = 0.0;

  void validate() const;
};

struct RootResult {
  std::vector<double> roots;
  std::vector<double> residuals;
  std::size_t newton_iters = 0;
};

using ScalarFunction = std::function<double(double)>;

/// Newton from y = 0; on failure, sign-change scan plus safeguarded
/// bisection on [-bh, bh]. Empty result when P never changes sign.
RootResult find_root(const ScalarFunction& p, const ScalarFunction& dp,
                     const SmoothingConfig& cfg);

/// Uniform sign-change scan with Newton polish inside each bracket. `dp`
/// may be empty, in which case a central difference is used.
RootResult find_all_roots(const ScalarFunction& p, const SmoothingConfig& cfg,
                          const ScalarFunction& dp = {});

/// Integral of G(y) rho(y) over R, split at the roots.
double preintegrate(const ScalarFunction& g, const RootResult& roots, const SmoothingConfig& cfg);

struct SmoothingDiagnostics {
  std::atomic<std::size_t> evaluations{0};
  std::atomic<std::size_t> no_root{0};
  std::atomic<std::size_t> multi_root{0};
  std::atomic<std::size_t> newton_iters{0};
  std::atomic<std::size_t> path_evaluations{0};
};

/// The smoothed integrand I-bar over the dim() - 1 coordinates left after
/// removing y1. Reentrant: concurrent calls at different points are safe.
class SmoothedIntegrand {
 public:
  SmoothedIntegrand(std::shared_ptr<const PathModel> model, PayoffSpec payoff,
                    SmoothingConfig cfg);

  std::size_t dim() const noexcept { return model_->dim() - 1; }
  double operator()(std::span<const double> rest) const;
  /// Roots of P for the given remaining coordinates (after offset/truncation).
  RootResult roots(std::span<const double> rest) const;

  const SmoothingDiagnostics& diagnostics() const noexcept { return *diag_; }
  const PathModel& model() const noexcept { return *model_; }
  const PayoffSpec& payoff() const noexcept { return payoff_; }
  const SmoothingConfig& config() const noexcept { return cfg_; }

 private:
  std::shared_ptr<const PathModel> model_;
  PayoffSpec payoff_;
  SmoothingConfig cfg_;
  std::shared_ptr<SmoothingDiagnostics> diag_;
};

SmoothedIntegrand smooth(std::shared_ptr<const PathModel> model, const PayoffSpec& payoff,
                         const SmoothingConfig& cfg = {});

/// Unsmoothed G over all dim() coordinates (y1 first).
std::function<double(std::span<const double>)> raw_integrand(
    std::shared_ptr<const PathModel> model, const PayoffSpec& payoff);

/// Standard normal density.
double normal_pdf(double x);

}  // namespace smoothquad
