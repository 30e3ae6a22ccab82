#pragma once

// End-to-end pricing: model + payoff -> (smoothed or raw) integrand ->
// ASGQ / rQMC / MC, plus Richardson extrapolation, the three-way error
// split and the work-parameter advisor.

#include "smoothquad/models.hpp"
#include "smoothquad/payoffs.hpp"
#include "smoothquad/quadrature.hpp"
#include "smoothquad/sampling.hpp"
#include "smoothquad/smoothing.hpp"

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>

namespace smoothquad {

enum class Method { ASGQ, RQMC, MC };
enum class IntegrandKind { Smoothed, Raw };

std::string to_string(Method m);
std::string to_string(IntegrandKind k);
Method method_from_string(const std::string& s);
IntegrandKind integrand_from_string(const std::string& s);

struct PricingPlan {
  std::shared_ptr<const PathModel> model;
  PayoffSpec payoff;
  Method method = Method::ASGQ;
  IntegrandKind integrand = IntegrandKind::Smoothed;
  SmoothingConfig smoothing;
  AsgqConfig asgq;
  LatticeConfig lattice;
  McConfig mc;
  /// 0: plain estimate on the model grid. 1: 2 Q(N) - Q(N/2) with N the
  /// model's step count.
  int richardson_level = 0;
  /// Worker cap for sampling methods and concurrent Richardson legs.
  std::size_t threads = 1;

  void validate() const;
  /// Copy of the plan on a grid with `steps` steps.
  PricingPlan with_steps(std::size_t steps) const;
  /// Dimension of the integrand the method sees.
  std::size_t integrand_dim() const;
};

/// The plan's integrand together with an instrumented call counter.
struct PlanIntegrand {
  GaussianIntegrand f;
  std::size_t dim = 0;
  std::shared_ptr<std::atomic<std::size_t>> calls;
};
PlanIntegrand make_integrand(const PricingPlan& plan);

/// Prices the plan; dispatches to richardson() when richardson_level = 1.
/// OUBased Heston models with non-integer n* and no pinned process count
/// are priced by interpolating the two neighbouring integer counts.
Estimate price(const PricingPlan& plan);

/// Level-1 Richardson on the plan's grid: legs N and N/2, work summed.
/// MC legs on dyadic grids share their Brownian paths.
Estimate richardson(const PricingPlan& plan);
/// Generic form over a per-step-count estimator.
Estimate richardson(const std::function<Estimate(std::size_t steps)>& q, std::size_t n_fine);

struct ErrorDecomposition {
  double value = 0.0;
  double total = 0.0;       // |value - reference|
  double bias = 0.0;        // Error I
  double smoothing = 0.0;   // Error II
  double quadrature = 0.0;  // Error III
};

/// Value of one pipeline run at a step count and smoothing configuration.
using LegEvaluator = std::function<double(std::size_t steps, const SmoothingConfig& cfg)>;

/// Error I from the step-halving difference scaled by the weak order,
/// Error II from a refined smoothing configuration (2 m_lag, tol / 100) at
/// fixed N, Error III as what is left of the signed total.
ErrorDecomposition error_decomposition(const LegEvaluator& leg, std::size_t steps,
                                       const SmoothingConfig& cfg, double reference,
                                       int weak_order = 1);
ErrorDecomposition error_decomposition(const PricingPlan& plan, double reference);

struct WorkModelParams {
  double p = 0.0;  // quadrature regularity exponent
  double s = 0.0;  // preintegration regularity exponent
  double tol = 1e-2;
};

/// Exponent-based parameter suggestions with unit constants. They are
/// advisory: the constants are unknown and the experiments pick the
/// parameters by hand.
struct WorkAdvice {
  double dt_exponent = 0.0;      // dt ~ TOL^e
  double m_asgq_exponent = 0.0;  // M_ASGQ ~ dt^e
  double m_lag_exponent = 0.0;   // M_lag ~ dt^e
  double work_exponent = 0.0;    // Work ~ TOL^e
  double dt = 0.0;
  double m_asgq = 0.0;
  double m_lag = 0.0;
  bool advisory = true;
};
WorkAdvice work_advisor(const WorkModelParams& params);

/// Zero-rate Black-Scholes prices of E[max(S_T - K, 0)] and P(S_T >= K).
double black_scholes_call(double s0, double strike, double sigma, double horizon);
double black_scholes_digital(double s0, double strike, double sigma, double horizon);

}  // namespace smoothquad
