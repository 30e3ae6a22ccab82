#pragma once

// Payoffs g = max(phi, 0) or 1{phi >= 0} with phi smooth and monotone in
// the smoothing coordinate, plus the root function P(y1) = phi(X(y1)).

#include "smoothquad/models.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace smoothquad {

enum class PayoffKind { PositivePart, Indicator };

/// Smoothness order of the payoff at its kink/jump: 0 for digitals, 1 for
/// calls.
struct RegularityOrder {
  int eta = 0;
};

struct PayoffSpec {
  PayoffKind kind = PayoffKind::PositivePart;
  std::string name;
  /// Inner function phi and its gradient. For the shipped payoffs phi is
  /// affine: phi(x) = sum c_j x_j - K.
  std::function<double(std::span<const double>)> phi;
  std::function<void(std::span<const double>, std::span<double>)> phi_grad;
  double strike = 0.0;
  std::vector<double> weights;
  /// Coordinate along which phi is monotone (Eqs. monotonicity/growth).
  std::size_t monotone_coord = 0;
  /// -1 when phi decreases in the monotone coordinate (puts, spreads).
  /// Root finding works on orientation * phi, which is increasing; the
  /// payoff itself is always evaluated on phi.
  int orientation = 1;

  std::size_t dim() const noexcept { return weights.size(); }
  double operator()(std::span<const double> x) const;
  /// g as a function of the value of phi.
  double from_inner(double phi_value) const {
    if (kind == PayoffKind::Indicator) return phi_value >= 0.0 ? 1.0 : 0.0;
    return phi_value > 0.0 ? phi_value : 0.0;
  }
  RegularityOrder regularity() const {
    return {kind == PayoffKind::Indicator ? 0 : 1};
  }
};

PayoffSpec make_call(double strike);
PayoffSpec make_digital(double strike);
PayoffSpec make_basket_call(std::vector<double> weights, double strike);
/// Same as make_basket_call with an indicator payoff.
PayoffSpec make_basket_digital(std::vector<double> weights, double strike);
/// max(K - x, 0): phi decreasing, orientation -1.
PayoffSpec make_put(double strike);

/// Spot-check d phi / d x_j > 0 (after orientation) on the given points.
bool check_monotone(const PayoffSpec& payoff, std::span<const std::vector<double>> points);

/// P(y1) and P'(y1) for fixed remaining coordinates.
class RootFunction {
 public:
  /// `payoff` must outlive the RootFunction.
  RootFunction(const PayoffSpec& payoff, ConditionalPath path);

  /// orientation * phi(X(y)); increasing in y under the monotonicity condition.
  double operator()(double y) const;
  double derivative(double y) const;
  /// Terminal values X(y1).
  void terminal(double y, std::span<double> x) const;
  /// g(X(y1)).
  double payoff(double y) const;
  const ConditionalPath& path() const noexcept { return path_; }

 private:
  const PayoffSpec* payoff_;
  ConditionalPath path_;
};

RootFunction root_function(const PayoffSpec& payoff, const PathModel& model,
                           std::span<const double> coords_without_y1);

/// Central difference with h = 1e-6 * max(1, |y|).
double central_difference(const std::function<double(double)>& f, double y);

}  // namespace smoothquad
