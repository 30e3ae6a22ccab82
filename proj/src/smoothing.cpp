#include "smoothquad/smoothing.hpp"

#include "smoothquad/errors.hpp"
#include "smoothquad/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace smoothquad {

namespace {

double checked(const ScalarFunction& p, double y) {
  const double v = p(y);
  if (!std::isfinite(v)) throw EvaluationError("root function returned a non-finite value", y);
  return v;
}

ScalarFunction derivative_or_fd(const ScalarFunction& p, const ScalarFunction& dp) {
  if (dp) return dp;
  return [p](double y) { return central_difference(p, y); };
}

struct Polished {
  double root;
  double residual;
  std::size_t iters;
};

// Safeguarded Newton on a sign-change bracket [lo, hi].
Polished polish(const ScalarFunction& p, const ScalarFunction& dp, double lo, double hi,
                double f_lo, const SmoothingConfig& cfg) {
  double y = 0.5 * (lo + hi);
  std::size_t iters = 0;
  double best_y = y, best_f = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < cfg.max_newton_iters + 200; ++it) {
    const double f = checked(p, y);
    ++iters;
    if (std::abs(f) < std::abs(best_f)) {
      best_f = f;
      best_y = y;
    }
    if (std::abs(f) <= cfg.tol_newton) break;
    if ((f < 0.0) == (f_lo < 0.0)) {
      lo = y;
      f_lo = f;
    } else {
      hi = y;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(y))) break;
    const double d = dp(y);
    double next = (std::isfinite(d) && d != 0.0) ? y - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    y = next;
  }
  return {best_y, std::abs(best_f), iters};
}

std::vector<double> scan_grid(const SmoothingConfig& cfg) {
  const std::size_t m = std::max<std::size_t>(cfg.multi_root_scan_points, 2);
  std::vector<double> ys(m);
  for (std::size_t i = 0; i < m; ++i)
    ys[i] = -cfg.bracket_halfwidth + 2.0 * cfg.bracket_halfwidth * static_cast<double>(i) /
                                         static_cast<double>(m - 1);
  return ys;
}

}  // namespace

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

void SmoothingConfig::validate() const {
  if (m_lag < 1 || m_lag > 256) throw ParameterError("smoothing: m_lag must lie in [1, 256]");
  if (2 * m_lag > 256) throw ParameterError("smoothing: m_lag above 128 exceeds the Hermite fallback");
  if (!(tol_newton > 0.0)) throw ParameterError("smoothing: tol_newton must be > 0");
  if (max_newton_iters < 1) throw ParameterError("smoothing: max_newton_iters must be >= 1");
  if (!(bracket_halfwidth > 0.0)) throw ParameterError("smoothing: bracket_halfwidth must be > 0");
  if (multi_root_scan_points < 2)
    throw ParameterError("smoothing: multi_root_scan_points must be >= 2");
  if (m_leg < 1 || m_leg > 256) throw ParameterError("smoothing: m_leg must lie in [1, 256]");
  if (!(far_root > 0.0)) throw ParameterError("smoothing: far_root must be > 0");
}

RootResult find_root(const ScalarFunction& p, const ScalarFunction& dp_in,
                     const SmoothingConfig& cfg) {
  const ScalarFunction dp = derivative_or_fd(p, dp_in);
  RootResult out;
  double y = 0.0;
  for (std::size_t it = 0; it < cfg.max_newton_iters; ++it) {
    const double f = checked(p, y);
    ++out.newton_iters;
    if (std::abs(f) <= cfg.tol_newton) {
      out.roots.push_back(y);
      out.residuals.push_back(std::abs(f));
      return out;
    }
    const double d = dp(y);
    if (!std::isfinite(d) || d == 0.0) break;
    const double next = y - f / d;
    if (!(std::abs(next) <= cfg.bracket_halfwidth)) break;
    y = next;
  }

  // Fallback: bracket the sign change nearest to 0 and bisect.
  const auto ys = scan_grid(cfg);
  std::vector<double> fs(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) fs[i] = checked(p, ys[i]);
  std::ptrdiff_t best = -1;
  for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
    if ((fs[i] < 0.0) != (fs[i + 1] < 0.0)) {
      const auto dist = [&](std::size_t k) { return std::min(std::abs(ys[k]), std::abs(ys[k + 1])); };
      if (best < 0 || dist(i) < dist(static_cast<std::size_t>(best)))
        best = static_cast<std::ptrdiff_t>(i);
    }
  }
  if (best < 0) return out;
  const auto b = static_cast<std::size_t>(best);
  const auto pol = polish(p, dp, ys[b], ys[b + 1], fs[b], cfg);
  out.newton_iters += pol.iters;
  out.roots.push_back(pol.root);
  out.residuals.push_back(pol.residual);
  return out;
}

RootResult find_all_roots(const ScalarFunction& p, const SmoothingConfig& cfg,
                          const ScalarFunction& dp_in) {
  const ScalarFunction dp = derivative_or_fd(p, dp_in);
  const auto ys = scan_grid(cfg);
  std::vector<double> fs(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) fs[i] = checked(p, ys[i]);

  RootResult out;
  auto push = [&](double root, double residual) {
    if (!out.roots.empty() && std::abs(root - out.roots.back()) < 1e-8) return;
    out.roots.push_back(root);
    out.residuals.push_back(residual);
  };
  for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
    if (fs[i] == 0.0) {
      push(ys[i], 0.0);
      continue;
    }
    if ((fs[i] < 0.0) != (fs[i + 1] < 0.0) && fs[i + 1] != 0.0) {
      const auto pol = polish(p, dp, ys[i], ys[i + 1], fs[i], cfg);
      out.newton_iters += pol.iters;
      push(pol.root, pol.residual);
    }
  }
  if (fs.back() == 0.0) push(ys.back(), 0.0);
  return out;
}

double preintegrate(const ScalarFunction& g, const RootResult& found, const SmoothingConfig& cfg) {
  std::vector<double> roots;
  for (double r : found.roots)
    if (std::abs(r) <= cfg.far_root) roots.push_back(r);
  std::sort(roots.begin(), roots.end());
  // Drop degenerate interior intervals (G takes the same branch on both sides).
  for (std::size_t i = 0; i + 1 < roots.size();) {
    if (roots[i + 1] - roots[i] < cfg.min_interval) {
      roots.erase(roots.begin() + static_cast<std::ptrdiff_t>(i),
                  roots.begin() + static_cast<std::ptrdiff_t>(i + 2));
    } else {
      ++i;
    }
  }

  auto eval = [&](double y) {
    const double v = g(y);
    if (!std::isfinite(v)) throw EvaluationError("integrand non-finite at preintegration node", y);
    return v;
  };

  if (roots.empty()) {
    const Rule1D& h = cached_rule(RuleFamily::Hermite, 2 * cfg.m_lag);
    double s = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) s += h.weights[k] * eval(h.nodes[k]);
    return s;
  }

  const Rule1D& lag = cached_rule(RuleFamily::Laguerre, cfg.m_lag);
  auto tail = [&](double root, double direction) {
    double s = 0.0;
    for (std::size_t k = 0; k < lag.size(); ++k) {
      const double u = lag.nodes[k];
      const double zeta = root + direction * u;
      const double w = lag.weights[k] * std::exp(u - 0.5 * zeta * zeta) *
                       (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
      if (w == 0.0) continue;
      s += w * eval(zeta);
    }
    return s;
  };

  double total = tail(roots.front(), -1.0) + tail(roots.back(), 1.0);
  if (roots.size() > 1) {
    const Rule1D& leg = cached_rule(RuleFamily::Legendre, cfg.m_leg);
    for (std::size_t i = 0; i + 1 < roots.size(); ++i) {
      const double a = roots[i], b = roots[i + 1];
      const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
      for (std::size_t k = 0; k < leg.size(); ++k) {
        const double zeta = mid + half * leg.nodes[k];
        total += half * leg.weights[k] * normal_pdf(zeta) * eval(zeta);
      }
    }
  }
  return total;
}

// ---------------------------------------------------------------- SmoothedIntegrand

SmoothedIntegrand::SmoothedIntegrand(std::shared_ptr<const PathModel> model, PayoffSpec payoff,
                                     SmoothingConfig cfg)
    : model_(std::move(model)),
      payoff_(std::move(payoff)),
      cfg_(cfg),
      diag_(std::make_shared<SmoothingDiagnostics>()) {
  cfg_.validate();
  if (!model_) throw ParameterError("smooth: model required");
  if (model_->assets() != payoff_.dim())
    throw ParameterError("smooth: payoff dimension does not match the model's asset count");
  if (model_->dim() < 1) throw ParameterError("smooth: model has no coordinates");
}

RootResult SmoothedIntegrand::roots(std::span<const double> rest) const {
  ConditionalPath path;
  model_->conditional(rest, path);
  const RootFunction rf(payoff_, std::move(path));
  RootResult r = find_all_roots([&](double y) { return rf(y); }, cfg_,
                                [&](double y) { return rf.derivative(y); });
  for (double& y : r.roots) y += cfg_.root_offset;
  return r;
}

double SmoothedIntegrand::operator()(std::span<const double> rest) const {
  ConditionalPath path;
  model_->conditional(rest, path);
  const RootFunction rf(payoff_, std::move(path));
  RootResult r = find_all_roots([&](double y) { return rf(y); }, cfg_,
                                [&](double y) { return rf.derivative(y); });
  for (double& y : r.roots) y += cfg_.root_offset;

  diag_->evaluations.fetch_add(1, std::memory_order_relaxed);
  diag_->newton_iters.fetch_add(r.newton_iters, std::memory_order_relaxed);
  if (r.roots.empty()) diag_->no_root.fetch_add(1, std::memory_order_relaxed);
  if (r.roots.size() > 1) diag_->multi_root.fetch_add(1, std::memory_order_relaxed);

  return preintegrate([&](double y) { return rf.payoff(y); }, r, cfg_);
}

SmoothedIntegrand smooth(std::shared_ptr<const PathModel> model, const PayoffSpec& payoff,
                         const SmoothingConfig& cfg) {
  return SmoothedIntegrand(std::move(model), payoff, cfg);
}

std::function<double(std::span<const double>)> raw_integrand(
    std::shared_ptr<const PathModel> model, const PayoffSpec& payoff) {
  if (!model) throw ParameterError("raw_integrand: model required");
  if (model->assets() != payoff.dim())
    throw ParameterError("raw_integrand: payoff dimension does not match the model");
  return [model, payoff](std::span<const double> x) {
    thread_local ConditionalPath path;
    model->conditional(x.subspan(1), path);
    thread_local std::vector<double> terminal;
    terminal.resize(path.assets);
    for (std::size_t j = 0; j < path.assets; ++j) terminal[j] = path.terminal(j, x[0]);
    return payoff(terminal);
  };
}

}  // namespace smoothquad
