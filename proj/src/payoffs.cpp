#include "smoothquad/payoffs.hpp"

#include "smoothquad/errors.hpp"

#include <algorithm>
#include <cmath>

namespace smoothquad {

namespace {

PayoffSpec affine_payoff(PayoffKind kind, std::string name, std::vector<double> weights,
                         double strike, int orientation) {
  if (!(strike > 0.0) || !std::isfinite(strike))
    throw ParameterError(name + ": strike must be > 0");
  if (weights.empty()) throw ParameterError(name + ": weights must be non-empty");
  bool any = false;
  for (double c : weights) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ParameterError(name + ": weights must be >= 0");
    any = any || c > 0.0;
  }
  if (!any) throw ParameterError(name + ": weights must not all be zero");

  PayoffSpec p;
  p.kind = kind;
  p.name = std::move(name);
  p.strike = strike;
  p.weights = weights;
  p.orientation = orientation;
  p.monotone_coord = static_cast<std::size_t>(
      std::max_element(weights.begin(), weights.end()) - weights.begin());
  const double sign = orientation;
  p.phi = [weights, strike, sign](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * x[j];
    return sign * (s - strike);
  };
  p.phi_grad = [weights, sign](std::span<const double>, std::span<double> g) {
    for (std::size_t j = 0; j < weights.size(); ++j) g[j] = sign * weights[j];
  };
  return p;
}

}  // namespace

double PayoffSpec::operator()(std::span<const double> x) const { return from_inner(phi(x)); }

PayoffSpec make_call(double strike) {
  return affine_payoff(PayoffKind::PositivePart, "call", {1.0}, strike, 1);
}

PayoffSpec make_digital(double strike) {
  return affine_payoff(PayoffKind::Indicator, "digital", {1.0}, strike, 1);
}

PayoffSpec make_basket_call(std::vector<double> weights, double strike) {
  return affine_payoff(PayoffKind::PositivePart, "basket-call", std::move(weights), strike, 1);
}

PayoffSpec make_basket_digital(std::vector<double> weights, double strike) {
  return affine_payoff(PayoffKind::Indicator, "basket-digital", std::move(weights), strike, 1);
}

PayoffSpec make_put(double strike) {
  return affine_payoff(PayoffKind::PositivePart, "put", {1.0}, strike, -1);
}

bool check_monotone(const PayoffSpec& payoff, std::span<const std::vector<double>> points) {
  std::vector<double> grad(payoff.dim());
  for (const auto& x : points) {
    if (x.size() != payoff.dim()) throw InputShapeError("check_monotone: point dimension");
    payoff.phi_grad(x, grad);
    if (!(payoff.orientation * grad[payoff.monotone_coord] > 0.0)) return false;
  }
  return true;
}

RootFunction::RootFunction(const PayoffSpec& payoff, ConditionalPath path)
    : payoff_(&payoff), path_(std::move(path)) {
  if (path_.assets != payoff.dim())
    throw InputShapeError("root_function: payoff dimension does not match the model");
}

void RootFunction::terminal(double y, std::span<double> x) const {
  for (std::size_t j = 0; j < path_.assets; ++j) x[j] = path_.terminal(j, y);
}

double RootFunction::operator()(double y) const {
  thread_local std::vector<double> x;
  x.resize(path_.assets);
  terminal(y, x);
  return payoff_->orientation * payoff_->phi(x);
}

double RootFunction::derivative(double y) const {
  thread_local std::vector<double> x, dx, g;
  const std::size_t d = path_.assets;
  x.resize(d);
  dx.resize(d);
  g.resize(d);
  for (std::size_t j = 0; j < d; ++j) std::tie(x[j], dx[j]) = path_.terminal_with_derivative(j, y);
  payoff_->phi_grad(x, g);
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) s += g[j] * dx[j];
  return payoff_->orientation * s;
}

double RootFunction::payoff(double y) const {
  thread_local std::vector<double> x;
  x.resize(path_.assets);
  terminal(y, x);
  return (*payoff_)(x);
}

RootFunction root_function(const PayoffSpec& payoff, const PathModel& model,
                           std::span<const double> coords_without_y1) {
  ConditionalPath path;
  model.conditional(coords_without_y1, path);
  return RootFunction(payoff, std::move(path));
}

double central_difference(const std::function<double(double)>& f, double y) {
  const double h = 1e-6 * std::max(1.0, std::abs(y));
  return (f(y + h) - f(y - h)) / (2.0 * h);
}

}  // namespace smoothquad
