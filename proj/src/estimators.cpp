#include "smoothquad/estimators.hpp"

#include "smoothquad/errors.hpp"
#include "smoothquad/parallel.hpp"

#include <cmath>
#include <map>

namespace smoothquad {

std::string to_string(Method m) {
  switch (m) {
    case Method::ASGQ: return "asgq";
    case Method::RQMC: return "rqmc";
    case Method::MC: return "mc";
  }
  return "?";
}

std::string to_string(IntegrandKind k) { return k == IntegrandKind::Smoothed ? "smoothed" : "raw"; }

Method method_from_string(const std::string& s) {
  if (s == "asgq") return Method::ASGQ;
  if (s == "rqmc") return Method::RQMC;
  if (s == "mc") return Method::MC;
  throw ParameterError("unknown method '" + s + "' (expected asgq, rqmc or mc)");
}

IntegrandKind integrand_from_string(const std::string& s) {
  if (s == "smoothed") return IntegrandKind::Smoothed;
  if (s == "raw") return IntegrandKind::Raw;
  throw ParameterError("unknown integrand '" + s + "' (expected smoothed or raw)");
}

void PricingPlan::validate() const {
  if (!model) throw ParameterError("plan: model is required");
  if (!payoff.phi) throw ParameterError("plan: payoff has no inner function");
  if (payoff.dim() != model->assets())
    throw ParameterError("plan: payoff dimension " + std::to_string(payoff.dim()) +
                         " does not match the model's " + std::to_string(model->assets()) +
                         " assets");
  if (integrand == IntegrandKind::Smoothed) {
    if (payoff.monotone_coord >= payoff.dim() || (payoff.orientation != 1 && payoff.orientation != -1))
      throw ParameterError("plan: smoothing needs a payoff with a designated monotone coordinate");
    smoothing.validate();
  }
  if (richardson_level != 0 && richardson_level != 1)
    throw ParameterError("plan: richardson_level must be 0 or 1");
  const std::size_t n = model->grid().steps();
  if (richardson_level == 1 && (n < 2 || n % 2 != 0))
    throw ParameterError("plan: Richardson extrapolation needs an even step count");
  if (threads < 1) throw ParameterError("plan: threads must be >= 1");
  switch (method) {
    case Method::ASGQ:
      if (asgq.max_evaluations < 1) throw ParameterError("asgq: max_evaluations must be >= 1");
      if (!(asgq.tol >= 0.0)) throw ParameterError("asgq: tol must be >= 0");
      break;
    case Method::RQMC: lattice.validate(std::max<std::size_t>(integrand_dim(), 1)); break;
    case Method::MC: mc.validate(); break;
  }
}

PricingPlan PricingPlan::with_steps(std::size_t steps) const {
  PricingPlan p = *this;
  p.model = std::shared_ptr<const PathModel>(model->with_steps(steps));
  return p;
}

std::size_t PricingPlan::integrand_dim() const {
  return integrand == IntegrandKind::Smoothed ? model->dim() - 1 : model->dim();
}

PlanIntegrand make_integrand(const PricingPlan& plan) {
  PlanIntegrand out;
  out.dim = plan.integrand_dim();
  out.calls = std::make_shared<std::atomic<std::size_t>>(0);
  auto calls = out.calls;
  if (plan.integrand == IntegrandKind::Smoothed) {
    auto smoothed = std::make_shared<SmoothedIntegrand>(plan.model, plan.payoff, plan.smoothing);
    out.f = [smoothed, calls](std::span<const double> x) {
      calls->fetch_add(1, std::memory_order_relaxed);
      return (*smoothed)(x);
    };
  } else {
    auto raw = raw_integrand(plan.model, plan.payoff);
    out.f = [raw, calls](std::span<const double> x) {
      calls->fetch_add(1, std::memory_order_relaxed);
      return raw(x);
    };
  }
  return out;
}

namespace {

Estimate single_point(const PlanIntegrand& in) {
  Estimate e;
  e.value = in.f(std::span<const double>{});
  e.work = 1;
  return e;
}

Estimate run_method(const PricingPlan& plan) {
  const PlanIntegrand in = make_integrand(plan);
  if (in.dim == 0) return single_point(in);
  switch (plan.method) {
    case Method::ASGQ: {
      const auto r = asgq(in.f, in.dim, plan.asgq);
      Estimate e;
      e.value = r.estimate;
      e.stat_error = r.state.error_indicator();
      e.work = r.state.evaluations;
      e.budget_exhausted = r.state.budget_exhausted;
      return e;
    }
    case Method::RQMC: {
      LatticeConfig cfg = plan.lattice;
      cfg.threads = std::max(cfg.threads, plan.threads);
      return rqmc_estimate(in.f, in.dim, cfg);
    }
    case Method::MC: {
      McConfig cfg = plan.mc;
      cfg.threads = std::max(cfg.threads, plan.threads);
      return mc_estimate(in.f, in.dim, cfg);
    }
  }
  throw ParameterError("unknown method");
}

const HestonPathModel* interpolated_ou(const PricingPlan& plan) {
  const auto* h = dynamic_cast<const HestonPathModel*>(plan.model.get());
  if (!h || h->spec().scheme != VolScheme::OUBased || h->ou_processes()) return nullptr;
  return OuParams::from(h->spec()).p > 0.0 ? h : nullptr;
}

// Plain estimate on the plan's own grid (no Richardson).
Estimate price_base(const PricingPlan& plan) {
  const HestonPathModel* h = interpolated_ou(plan);
  if (!h) return run_method(plan);
  const OuParams params = OuParams::from(h->spec());
  std::map<int, Estimate> legs;
  const double value = ou_noninteger_price(params, [&](int n) {
    PricingPlan leg = plan;
    leg.model = std::make_shared<HestonPathModel>(h->spec(), h->grid(), n);
    legs[n] = run_method(leg);
    return legs[n].value;
  });
  Estimate e;
  e.value = value;
  const double w[2] = {1.0 - params.p, params.p};
  double var = 0.0;
  int i = 0;
  for (const auto& [n, est] : legs) {
    var += w[i] * w[i] * est.stat_error * est.stat_error;
    e.work += est.work;
    e.budget_exhausted = e.budget_exhausted || est.budget_exhausted;
    ++i;
  }
  e.stat_error = std::sqrt(var);
  return e;
}

// MC Richardson on one set of paths: 2 g_N(z) - g_{N/2}(coarsen(z)).
Estimate coupled_mc_richardson(const PricingPlan& plan) {
  const PricingPlan coarse = plan.with_steps(plan.model->grid().steps() / 2);
  const PlanIntegrand fine_f = make_integrand(plan);
  const PlanIntegrand coarse_f = make_integrand(coarse);
  const bool smoothed = plan.integrand == IntegrandKind::Smoothed;
  const auto& model = *plan.model;
  auto combined = [&](std::span<const double> z) {
    thread_local std::vector<double> full;
    full.clear();
    if (smoothed) full.push_back(0.0);
    full.insert(full.end(), z.begin(), z.end());
    const std::vector<double> c = model.coarsen(full);
    const auto cz = smoothed ? std::span<const double>(c).subspan(1) : std::span<const double>(c);
    return 2.0 * fine_f.f(z) - coarse_f.f(cz);
  };
  McConfig cfg = plan.mc;
  cfg.threads = std::max(cfg.threads, plan.threads);
  Estimate e = mc_estimate(combined, fine_f.dim, cfg);
  e.work = fine_f.calls->load() + coarse_f.calls->load();
  return e;
}

}  // namespace

Estimate richardson(const std::function<Estimate(std::size_t)>& q, std::size_t n_fine) {
  if (n_fine < 2 || n_fine % 2 != 0)
    throw ParameterError("richardson: fine step count must be even and >= 2");
  const Estimate fine = q(n_fine);
  const Estimate coarse = q(n_fine / 2);
  Estimate e;
  e.value = 2.0 * fine.value - coarse.value;
  e.stat_error = std::sqrt(4.0 * fine.stat_error * fine.stat_error +
                           coarse.stat_error * coarse.stat_error);
  e.work = fine.work + coarse.work;
  e.budget_exhausted = fine.budget_exhausted || coarse.budget_exhausted;
  return e;
}

Estimate richardson(const PricingPlan& plan_in) {
  PricingPlan plan = plan_in;
  plan.richardson_level = 1;
  plan.validate();
  plan.richardson_level = 0;
  const std::size_t n = plan.model->grid().steps();
  if (plan.method == Method::MC && plan.model->grid().dyadic() && !interpolated_ou(plan))
    return coupled_mc_richardson(plan);

  // Independent legs, run concurrently when threads allow.
  Estimate legs[2];
  const std::size_t steps[2] = {n, n / 2};
  const std::size_t leg_threads = plan.threads >= 2 ? 2 : 1;
  PricingPlan leg_plans[2] = {plan, plan.with_steps(n / 2)};
  for (auto& p : leg_plans) p.threads = std::max<std::size_t>(1, plan.threads / leg_threads);
  parallel_for(2, leg_threads, [&](std::size_t i) { legs[i] = price_base(leg_plans[i]); });
  return richardson([&](std::size_t s) { return s == steps[0] ? legs[0] : legs[1]; }, n);
}

Estimate price(const PricingPlan& plan) {
  plan.validate();
  if (plan.richardson_level == 1) return richardson(plan);
  return price_base(plan);
}

ErrorDecomposition error_decomposition(const LegEvaluator& leg, std::size_t steps,
                                       const SmoothingConfig& cfg, double reference,
                                       int weak_order) {
  if (steps < 2 || steps % 2 != 0)
    throw ParameterError("error_decomposition: step count must be even and >= 2");
  if (weak_order < 1) throw ParameterError("error_decomposition: weak_order must be >= 1");
  SmoothingConfig refined = cfg;
  refined.m_lag = std::min<std::size_t>(2 * cfg.m_lag, 128);
  refined.tol_newton = std::max(cfg.tol_newton / 100.0, 1e-14);
  refined.root_offset = 0.0;

  const double q = leg(steps, cfg);
  const double q_half = leg(steps / 2, cfg);
  const double q_refined = leg(steps, refined);

  const double bias = (q_half - q) / (std::ldexp(1.0, weak_order) - 1.0);
  const double smoothing = q - q_refined;
  const double total = q - reference;
  ErrorDecomposition out;
  out.value = q;
  out.total = std::abs(total);
  out.bias = std::abs(bias);
  out.smoothing = std::abs(smoothing);
  out.quadrature = std::abs(total - bias - smoothing);
  return out;
}

ErrorDecomposition error_decomposition(const PricingPlan& plan, double reference) {
  plan.validate();
  const LegEvaluator leg = [&](std::size_t steps, const SmoothingConfig& cfg) {
    PricingPlan p = plan.with_steps(steps);
    p.smoothing = cfg;
    return price(p).value;
  };
  return error_decomposition(leg, plan.model->grid().steps(), plan.smoothing, reference,
                             plan.richardson_level == 1 ? 2 : 1);
}

WorkAdvice work_advisor(const WorkModelParams& params) {
  const double p = params.p, s = params.s;
  if (!(p > 0.0) || !(s > 0.0) || !std::isfinite(p) || !std::isfinite(s))
    throw DomainError("work_advisor: p and s must be positive and finite");
  const double gap = p * s - p - s;
  if (!(gap > 0.0)) throw DomainError("work_advisor: requires p*s - p - s > 0");
  if (!(params.tol > 0.0)) throw ParameterError("work_advisor: tol must be > 0");
  const double sum = p * s + p + s;
  WorkAdvice a;
  a.dt_exponent = sum / gap;
  a.m_asgq_exponent = (p + s - p * s) / (p * sum);
  a.m_lag_exponent = (p + s - p * s) / (s * sum);
  // Work = M_ASGQ * M_lag / dt.
  a.work_exponent = -a.dt_exponent - 1.0 / p - 1.0 / s;
  a.dt = std::pow(params.tol, a.dt_exponent);
  a.m_asgq = std::pow(a.dt, a.m_asgq_exponent);
  a.m_lag = std::pow(a.dt, a.m_lag_exponent);
  return a;
}

namespace {

void check_bs(double s0, double strike, double sigma, double horizon) {
  if (!(s0 > 0.0) || !(strike > 0.0) || !(sigma > 0.0) || !(horizon > 0.0))
    throw ParameterError("black_scholes: s0, strike, sigma and horizon must be > 0");
}

}  // namespace

double black_scholes_call(double s0, double strike, double sigma, double horizon) {
  check_bs(s0, strike, sigma, horizon);
  const double sd = sigma * std::sqrt(horizon);
  const double d1 = (std::log(s0 / strike) + 0.5 * sd * sd) / sd;
  return s0 * normal_cdf(d1) - strike * normal_cdf(d1 - sd);
}

double black_scholes_digital(double s0, double strike, double sigma, double horizon) {
  check_bs(s0, strike, sigma, horizon);
  const double sd = sigma * std::sqrt(horizon);
  return normal_cdf((std::log(s0 / strike) - 0.5 * sd * sd) / sd);
}

}  // namespace smoothquad
