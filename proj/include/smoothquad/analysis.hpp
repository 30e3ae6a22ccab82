#pragma once

// Convergence studies: quadrature and statistical error curves, weak
// error slopes, first-difference profiles, smoothing-parameter sweeps and
// the derivative-decay probe over Haar levels.

#include "smoothquad/estimators.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace smoothquad {

enum class FitKind {
  LogLog,   // log(metric) = slope * log(axis) + c
  SemiLog,  // log(metric) = slope * axis + c
};

struct SlopeFit {
  FitKind kind = FitKind::LogLog;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  /// Gates may use the slope only when r2 >= 0.9.
  bool reliable() const noexcept { return r2 >= 0.9; }
};

/// Least-squares fit; points with non-positive metric (or axis for LogLog)
/// are skipped. Throws ParameterError with fewer than two usable points.
SlopeFit fit_slope(const std::vector<double>& axis, const std::vector<double>& metric,
                   FitKind kind = FitKind::LogLog);

struct StudySeries {
  std::string label;
  std::vector<double> axis;    // strictly increasing
  std::vector<double> metric;  // finite
  /// Per-point auxiliary value (CI half-width, evaluation count, raw value).
  std::vector<double> aux;
  std::optional<SlopeFit> fit;
};

struct StudyResult {
  std::string kind;
  std::string axis_name;
  std::string metric_name;
  std::string aux_name;
  std::vector<StudySeries> series;
  std::vector<std::string> flags;
  std::map<std::string, std::string> metadata;

  const StudySeries& at(const std::string& label) const;
  bool has_flag(const std::string& flag) const;
};

/// Relative quadrature error |Q - ref| / |ref| of ASGQ against the number
/// of integrand evaluations, for the smoothed and raw integrands. Each
/// budget reads the adaptive trace of one run with the largest budget.
StudyResult quadrature_error_study(const PricingPlan& plan, const std::vector<std::size_t>& budgets,
                                   double reference);

/// CI half-width against the sample count (MC: samples, rQMC: points per
/// shift) for the plan's method and integrand.
StudyResult statistical_error_study(const PricingPlan& plan,
                                    const std::vector<std::size_t>& sample_grid);

struct WeakErrorOptions {
  /// GBM with MC only: estimate the bias as E[g(X^N) - g(X_exact)] on the
  /// same Brownian paths, which is far less noisy than pricing alone.
  bool couple_exact_gbm = false;
  /// Points whose |bias| is below this multiple of their CI are not fitted.
  double ci_factor = 1.0;
};

/// |E[g(X^N)] - ref| against dt = T / N with error bars; the fit uses only
/// points whose bias dominates their CI and is dropped (flag
/// "ci-dominated") when fewer than two remain.
StudyResult weak_error_study(const PricingPlan& plan, const std::vector<std::size_t>& steps,
                             double reference, const WeakErrorOptions& opts = {});

/// |Delta E| along 1 + k e_i for each direction, k = 1..k_max, with a
/// semi-log fit of the decay rate per direction.
StudyResult mixed_difference_study(const PricingPlan& plan, const std::vector<std::size_t>& directions,
                                   int k_max);

/// Relative change of the ASGQ estimate (fixed budget) against a tight
/// smoothing configuration (m_lag = 128, tol_newton = 1e-12), swept over
/// m_lag, tol_newton (at m_lag = 128) and an injected root offset. Grids
/// may come in any order; each series is reported ascending.
StudyResult smoothing_parameter_study(const PricingPlan& plan, const std::vector<std::size_t>& m_lag_grid,
                                      const std::vector<double>& tol_grid,
                                      const std::vector<double>& offset_grid);

/// One coordinate of the integrand with its Haar level.
struct LevelledCoordinate {
  std::size_t index;  // position in the integrand's argument vector
  int level;          // Haar level n >= 0
};

struct DecayProbeReport {
  std::vector<int> levels;               // contiguous from 0
  std::vector<double> mean_abs_derivative;
  std::vector<double> level_ratios;      // consecutive ratios
  double fitted_ratio = 0.0;             // exp of the semi-log slope
  double r2 = 0.0;
  std::size_t probe_points = 0;
};

/// Central differences (h = 1e-4) at n_probe_points standard normal points.
DecayProbeReport derivative_decay_probe(const GaussianIntegrand& f, std::size_t dim,
                                        const std::vector<LevelledCoordinate>& coords,
                                        std::size_t n_probe_points, std::uint64_t seed,
                                        double h = 1e-4);
/// Probe of the plan's smoothed integrand over every fine bridge coordinate
/// with Haar level < max_levels.
DecayProbeReport derivative_decay_probe(const PricingPlan& plan, int max_levels,
                                        std::size_t n_probe_points, std::uint64_t seed);

/// Fine bridge coordinates of the model's smoothed integrand (y1 removed).
std::vector<LevelledCoordinate> smoothed_fine_coordinates(const PathModel& model);

StudyResult to_study(const DecayProbeReport& report);

}  // namespace smoothquad
