#pragma once

// One-dimensional Gaussian rules and the dimension-adaptive sparse-grid
// quadrature driver over Gaussian-weighted integrands.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace smoothquad {

enum class RuleFamily {
  Hermite,   // probabilists': weight exp(-x^2/2)/sqrt(2 pi), total mass 1
  Laguerre,  // weight exp(-x) on [0, inf), total mass 1
  Legendre,  // weight 1 on [-1, 1], total mass 2
};

struct Rule1D {
  RuleFamily family;
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
  /// Legendre rule mapped affinely onto [a, b] (weights scale to b - a).
  Rule1D mapped(double a, double b) const;
};

/// Golub-Welsch rule with m points, 1 <= m <= 256. Symmetric families get
/// exactly symmetric nodes (the middle node of odd rules is exactly 0).
Rule1D gauss_rule(RuleFamily family, std::size_t m);
/// Thread-safe cached variant of gauss_rule.
const Rule1D& cached_rule(RuleFamily family, std::size_t m);

using MultiIndex = std::vector<int>;

inline constexpr int kMaxLevel = 8;  // 129 points

/// Number of Hermite points at level k: m(1) = 1, m(k) = 2^(k-1) + 1, k <= kMaxLevel.
std::size_t level_points(int level);

/// Integrand over R^dim against the standard Gaussian density.
using GaussianIntegrand = std::function<double(std::span<const double>)>;

/// Caches integrand values by exact node coordinates and counts the
/// distinct evaluations.
class EvaluationCache {
 public:
  explicit EvaluationCache(GaussianIntegrand f) : f_(std::move(f)) {}

  double operator()(std::span<const double> x);
  std::size_t evaluations() const noexcept { return evaluations_; }
  std::size_t lookups() const noexcept { return lookups_; }
  bool contains(std::span<const double> x) const;

 private:
  struct Hash {
    std::size_t operator()(const std::vector<double>& v) const noexcept;
  };
  GaussianIntegrand f_;
  std::unordered_map<std::vector<double>, double, Hash> values_;
  std::size_t evaluations_ = 0;
  std::size_t lookups_ = 0;
};

/// Full tensor product of Hermite rules of sizes m(beta_i).
double tensor_quadrature(const GaussianIntegrand& f, const MultiIndex& beta,
                         const std::function<std::size_t(int)>& level_map = level_points);

/// Memoized tensor values Q^beta and first-difference operators.
class SparseGridState {
 public:
  SparseGridState(GaussianIntegrand f, std::size_t dim,
                  std::function<std::size_t(int)> level_map = level_points);

  std::size_t dim() const noexcept { return dim_; }
  double tensor(const MultiIndex& beta);
  /// Delta Q^beta by inclusion-exclusion over the corners beta - e_S.
  double delta(const MultiIndex& beta);
  /// Distinct points of the tensor grid of beta not yet evaluated.
  std::size_t new_points(const MultiIndex& beta) const;
  std::size_t evaluations() const noexcept { return cache_.evaluations(); }

 private:
  std::size_t dim_;
  std::function<std::size_t(int)> level_map_;
  EvaluationCache cache_;
  std::map<MultiIndex, double> tensors_;
};

double delta_q(const GaussianIntegrand& f, const MultiIndex& beta);

struct AsgqConfig {
  std::size_t max_evaluations = 10000;
  double tol = 0.0;
  /// Divide |Delta E| by the new work of the index when ranking the front.
  bool work_normalized_profit = false;
};

struct AsgqTracePoint {
  std::size_t evaluations;
  double estimate;
  std::size_t accepted;
};

struct AdaptiveState {
  std::map<MultiIndex, double> accepted;  // old set with its Delta Q
  std::map<MultiIndex, double> front;     // active set with its Delta Q
  std::size_t evaluations = 0;
  bool budget_exhausted = false;
  bool converged = false;
  std::vector<AsgqTracePoint> trace;

  double error_indicator() const;
  bool admissible() const;
};

struct AsgqResult {
  double estimate = 0.0;
  AdaptiveState state;
};

/// Gerstner-Griebel dimension-adaptive loop with profit |Delta E_beta|.
AsgqResult asgq(const GaussianIntegrand& f, std::size_t dim, const AsgqConfig& cfg);

/// |Delta E| along one axis: entry k is |Delta Q| at 1 + k e_i, k = 0..k_max
/// (entry 0 is the base index, i.e. f at the origin).
std::vector<double> first_difference_profile(const GaussianIntegrand& f, std::size_t dim,
                                             std::size_t direction, int k_max);

std::string to_string(RuleFamily f);

}  // namespace smoothquad
