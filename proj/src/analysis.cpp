#include "smoothquad/analysis.hpp"

#include "smoothquad/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace smoothquad {

SlopeFit fit_slope(const std::vector<double>& axis, const std::vector<double>& metric, FitKind kind) {
  if (axis.size() != metric.size()) throw InputShapeError("fit_slope: axis/metric length mismatch");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < axis.size(); ++i) {
    if (!(metric[i] > 0.0) || !std::isfinite(metric[i])) continue;
    if (kind == FitKind::LogLog && !(axis[i] > 0.0)) continue;
    xs.push_back(kind == FitKind::LogLog ? std::log(axis[i]) : axis[i]);
    ys.push_back(std::log(metric[i]));
  }
  if (xs.size() < 2) throw ParameterError("fit_slope: fewer than two usable points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw ParameterError("fit_slope: axis values coincide");
  SlopeFit fit;
  fit.kind = kind;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

const StudySeries& StudyResult::at(const std::string& label) const {
  for (const auto& s : series)
    if (s.label == label) return s;
  throw ParameterError("study '" + kind + "' has no series '" + label + "'");
}

bool StudyResult::has_flag(const std::string& flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

namespace {

void require_increasing(const std::vector<double>& axis, const char* what) {
  if (axis.empty()) throw ParameterError(std::string(what) + ": empty axis");
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (!(axis[i] > axis[i - 1]))
      throw ParameterError(std::string(what) + ": axis must be strictly increasing");
}

template <class T>
std::vector<double> as_doubles(const std::vector<T>& v) {
  return {v.begin(), v.end()};
}

std::optional<SlopeFit> try_fit(const std::vector<double>& axis, const std::vector<double>& metric,
                                FitKind kind) {
  std::size_t usable = 0;
  for (double m : metric) usable += m > 0.0 ? 1 : 0;
  if (usable < 2) return std::nullopt;
  try {
    return fit_slope(axis, metric, kind);
  } catch (const ParameterError&) {
    return std::nullopt;  // e.g. every usable point at the same axis value
  }
}

void base_metadata(StudyResult& r, const PricingPlan& plan) {
  r.metadata["model"] = plan.model->describe();
  r.metadata["payoff"] = plan.payoff.name;
  r.metadata["method"] = to_string(plan.method);
  r.metadata["integrand"] = to_string(plan.integrand);
  r.metadata["richardson_level"] = std::to_string(plan.richardson_level);
}

}  // namespace

StudyResult quadrature_error_study(const PricingPlan& plan_in, const std::vector<std::size_t>& budgets,
                                   double reference) {
  if (reference == 0.0) throw ParameterError("quadrature_error_study: reference must be non-zero");
  const auto axis = as_doubles(budgets);
  require_increasing(axis, "quadrature_error_study");
  StudyResult r;
  r.kind = "quad-study";
  r.axis_name = "budget";
  r.metric_name = "relative_error";
  r.aux_name = "evaluations";
  PricingPlan plan = plan_in;
  plan.method = Method::ASGQ;
  plan.richardson_level = 0;
  base_metadata(r, plan);
  r.metadata["reference"] = std::to_string(reference);

  for (const IntegrandKind kind : {IntegrandKind::Smoothed, IntegrandKind::Raw}) {
    plan.integrand = kind;
    plan.asgq.max_evaluations = budgets.back();
    plan.validate();
    const PlanIntegrand in = make_integrand(plan);
    StudySeries s;
    s.label = to_string(kind);
    if (in.dim == 0) {
      const double v = in.f(std::span<const double>{});
      for (double b : axis) {
        s.axis.push_back(b);
        s.metric.push_back(std::abs(v - reference) / std::abs(reference));
        s.aux.push_back(1.0);
      }
    } else {
      const auto res = asgq(in.f, in.dim, plan.asgq);
      const auto& trace = res.state.trace;
      for (std::size_t i = 0; i < budgets.size(); ++i) {
        const AsgqTracePoint* last = nullptr;
        for (const auto& t : trace)
          if (t.evaluations <= budgets[i]) last = &t;
        if (!last) continue;
        s.axis.push_back(axis[i]);
        s.metric.push_back(std::abs(last->estimate - reference) / std::abs(reference));
        s.aux.push_back(static_cast<double>(last->evaluations));
      }
    }
    s.fit = try_fit(s.aux, s.metric, FitKind::LogLog);
    r.series.push_back(std::move(s));
  }
  return r;
}

StudyResult statistical_error_study(const PricingPlan& plan_in,
                                    const std::vector<std::size_t>& sample_grid) {
  if (plan_in.method == Method::ASGQ)
    throw ParameterError("statistical_error_study: needs the mc or rqmc method");
  const auto axis = as_doubles(sample_grid);
  require_increasing(axis, "statistical_error_study");
  StudyResult r;
  r.kind = "stat-study";
  r.axis_name = plan_in.method == Method::MC ? "samples" : "points_per_shift";
  r.metric_name = "ci_half_width";
  r.aux_name = "value";
  base_metadata(r, plan_in);
  r.metadata["seed"] = std::to_string(plan_in.method == Method::MC ? plan_in.mc.seed
                                                                   : plan_in.lattice.seed);
  StudySeries s;
  s.label = to_string(plan_in.integrand);
  for (std::size_t m : sample_grid) {
    PricingPlan plan = plan_in;
    if (plan.method == Method::MC)
      plan.mc.n_samples = m;
    else
      plan.lattice.n_points = m;
    const Estimate e = price(plan);
    s.axis.push_back(static_cast<double>(m));
    s.metric.push_back(e.stat_error);
    s.aux.push_back(e.value);
  }
  s.fit = try_fit(s.axis, s.metric, FitKind::LogLog);
  r.series.push_back(std::move(s));
  return r;
}

StudyResult weak_error_study(const PricingPlan& plan_in, const std::vector<std::size_t>& steps_in,
                             double reference, const WeakErrorOptions& opts) {
  if (steps_in.empty()) throw ParameterError("weak_error_study: empty step grid");
  std::vector<std::size_t> steps = steps_in;
  std::sort(steps.begin(), steps.end(), std::greater<>());  // ascending dt
  if (std::adjacent_find(steps.begin(), steps.end()) != steps.end())
    throw ParameterError("weak_error_study: duplicate step counts");

  StudyResult r;
  r.kind = "weak-error";
  r.axis_name = "dt";
  r.metric_name = "abs_bias";
  r.aux_name = "ci_half_width";
  base_metadata(r, plan_in);
  r.metadata["reference"] = std::to_string(reference);
  r.metadata["coupled_exact"] = opts.couple_exact_gbm ? "true" : "false";

  StudySeries s;
  s.label = plan_in.model->describe();
  std::vector<double> fit_axis, fit_metric;
  for (std::size_t n : steps) {
    PricingPlan plan = plan_in.with_steps(n);
    plan.richardson_level = 0;
    double bias, ci;
    if (opts.couple_exact_gbm) {
      const auto* gbm = dynamic_cast<const GbmPathModel*>(plan.model.get());
      if (!gbm || plan.method != Method::MC)
        throw ParameterError("weak_error_study: exact coupling needs a GBM model and the mc method");
      auto model = std::static_pointer_cast<const GbmPathModel>(plan.model);
      const auto raw = raw_integrand(plan.model, plan.payoff);
      const PayoffSpec payoff = plan.payoff;
      const auto exact = [model, payoff](std::span<const double> z) {
        const Eigen::MatrixXd inc = model->increments(z);
        const auto& spec = model->spec();
        const double t = model->grid().horizon();
        std::vector<double> x(spec.assets());
        for (std::size_t j = 0; j < x.size(); ++j) {
          const double w = inc.row(static_cast<Eigen::Index>(j)).sum();
          const double mu = spec.drift.empty() ? 0.0 : spec.drift[j];
          const double sig = spec.sigma[j];
          x[j] = spec.x0[j] * std::exp((mu - 0.5 * sig * sig) * t + sig * w);
        }
        return payoff(x);
      };
      McConfig cfg = plan.mc;
      cfg.threads = std::max(cfg.threads, plan.threads);
      const auto c = mc_coupled(raw, exact, plan.model->dim(), cfg);
      bias = c.difference.value;
      ci = c.difference.stat_error;
    } else {
      const Estimate e = price(plan);
      bias = e.value - reference;
      ci = e.stat_error;
    }
    const double dt = plan.model->grid().dt();
    s.axis.push_back(dt);
    s.metric.push_back(std::abs(bias));
    s.aux.push_back(ci);
    if (std::abs(bias) > opts.ci_factor * ci) {
      fit_axis.push_back(dt);
      fit_metric.push_back(std::abs(bias));
    }
  }
  r.metadata["points_fitted"] = std::to_string(fit_axis.size());
  if (fit_axis.size() >= 2)
    s.fit = fit_slope(fit_axis, fit_metric, FitKind::LogLog);
  else
    r.flags.push_back("ci-dominated");
  r.series.push_back(std::move(s));
  return r;
}

StudyResult mixed_difference_study(const PricingPlan& plan, const std::vector<std::size_t>& directions,
                                   int k_max) {
  if (k_max < 1) throw ParameterError("mixed_difference_study: k_max must be >= 1");
  plan.validate();
  StudyResult r;
  r.kind = "mixed-diff";
  r.axis_name = "k";
  r.metric_name = "abs_delta";
  r.aux_name = "direction";
  base_metadata(r, plan);
  const PlanIntegrand in = make_integrand(plan);
  if (in.dim == 0) throw ParameterError("mixed_difference_study: integrand has no coordinates");
  for (std::size_t dir : directions) {
    const auto profile = first_difference_profile(in.f, in.dim, dir, k_max);
    StudySeries s;
    s.label = "direction-" + std::to_string(dir);
    for (int k = 1; k <= k_max; ++k) {
      s.axis.push_back(k);
      s.metric.push_back(profile[static_cast<std::size_t>(k)]);
      s.aux.push_back(static_cast<double>(dir));
    }
    s.fit = try_fit(s.axis, s.metric, FitKind::SemiLog);
    r.series.push_back(std::move(s));
  }
  return r;
}

StudyResult smoothing_parameter_study(const PricingPlan& plan_in,
                                      const std::vector<std::size_t>& m_lag_grid,
                                      const std::vector<double>& tol_grid,
                                      const std::vector<double>& offset_grid) {
  PricingPlan plan = plan_in;
  plan.method = Method::ASGQ;
  plan.integrand = IntegrandKind::Smoothed;
  plan.richardson_level = 0;
  plan.smoothing.root_offset = 0.0;
  plan.validate();

  StudyResult r;
  r.kind = "smoothing-study";
  r.axis_name = "parameter";
  r.metric_name = "relative_error";
  r.aux_name = "value";
  base_metadata(r, plan);
  r.metadata["budget"] = std::to_string(plan.asgq.max_evaluations);

  auto run = [&](const SmoothingConfig& cfg) {
    PricingPlan p = plan;
    p.smoothing = cfg;
    return price(p).value;
  };
  SmoothingConfig tight = plan.smoothing;
  tight.m_lag = 128;
  tight.tol_newton = 1e-12;
  const double ref = run(tight);
  if (ref == 0.0) throw EvaluationError("smoothing_parameter_study: zero reference value", 0.0);
  r.metadata["reference"] = std::to_string(ref);

  auto add_series = [&](const std::string& label, std::vector<double> axis, auto configure,
                        FitKind kind) {
    if (axis.empty()) return;
    std::sort(axis.begin(), axis.end());
    require_increasing(axis, "smoothing_parameter_study");
    StudySeries s;
    s.label = label;
    for (double a : axis) {
      SmoothingConfig cfg = plan.smoothing;
      configure(cfg, a);
      const double v = run(cfg);
      s.axis.push_back(a);
      s.metric.push_back(std::abs(v - ref) / std::abs(ref));
      s.aux.push_back(v);
    }
    s.fit = try_fit(s.axis, s.metric, kind);
    r.series.push_back(std::move(s));
  };
  add_series("m_lag", as_doubles(m_lag_grid),
             [](SmoothingConfig& c, double a) { c.m_lag = static_cast<std::size_t>(a); },
             FitKind::SemiLog);
  add_series("tol_newton", tol_grid,
             [](SmoothingConfig& c, double a) {
               c.m_lag = 128;
               c.tol_newton = a;
             },
             FitKind::LogLog);
  add_series("root_offset", offset_grid,
             [&](SmoothingConfig& c, double a) {
               c.m_lag = 128;
               c.tol_newton = tight.tol_newton;
               c.root_offset = a;
             },
             FitKind::LogLog);
  // The O(delta^(eta+1)) model holds while no Laguerre node of the tail on
  // the wrong side of the true root falls between it and the shifted root;
  // beyond the smallest node the quadrature partly recovers the lost mass.
  if (!r.series.empty() && r.series.back().label == "root_offset") {
    auto& s = r.series.back();
    const double first_node = cached_rule(RuleFamily::Laguerre, 128).nodes.front();
    r.metadata["offset_fit_limit"] = std::to_string(first_node);
    std::vector<double> ax, me;
    for (std::size_t i = 0; i < s.axis.size(); ++i)
      if (s.axis[i] < first_node) {
        ax.push_back(s.axis[i]);
        me.push_back(s.metric[i]);
      }
    s.fit = try_fit(ax, me, FitKind::LogLog);
    if (ax.size() < s.axis.size()) r.flags.push_back("offset-pre-asymptotic-points-excluded");
  }
  return r;
}

DecayProbeReport derivative_decay_probe(const GaussianIntegrand& f, std::size_t dim,
                                        const std::vector<LevelledCoordinate>& coords,
                                        std::size_t n_probe_points, std::uint64_t seed, double h) {
  if (coords.empty()) throw ParameterError("derivative_decay_probe: no coordinates");
  if (n_probe_points < 1) throw ParameterError("derivative_decay_probe: need probe points");
  if (!(h > 0.0)) throw ParameterError("derivative_decay_probe: h must be > 0");
  int max_level = -1;
  for (const auto& c : coords) {
    if (c.index >= dim || c.level < 0)
      throw ParameterError("derivative_decay_probe: coordinate out of range");
    max_level = std::max(max_level, c.level);
  }
  const auto levels = static_cast<std::size_t>(max_level + 1);
  std::vector<std::size_t> counts(levels, 0);
  for (const auto& c : coords) ++counts[static_cast<std::size_t>(c.level)];
  for (std::size_t l = 0; l < levels; ++l)
    if (counts[l] == 0) throw ParameterError("derivative_decay_probe: levels must be contiguous from 0");

  std::mt19937_64 rng(derive_seed(seed, "decay-probe"));
  std::normal_distribution<double> normal;
  std::vector<double> sums(levels, 0.0);
  std::vector<double> z(dim);
  for (std::size_t p = 0; p < n_probe_points; ++p) {
    for (double& v : z) v = normal(rng);
    for (const auto& c : coords) {
      const double saved = z[c.index];
      z[c.index] = saved + h;
      const double up = f(z);
      z[c.index] = saved - h;
      const double down = f(z);
      z[c.index] = saved;
      sums[static_cast<std::size_t>(c.level)] += std::abs(up - down) / (2.0 * h);
    }
  }

  DecayProbeReport rep;
  rep.probe_points = n_probe_points;
  for (std::size_t l = 0; l < levels; ++l) {
    rep.levels.push_back(static_cast<int>(l));
    rep.mean_abs_derivative.push_back(sums[l] /
                                      static_cast<double>(counts[l] * n_probe_points));
  }
  bool positive = true;
  for (std::size_t l = 0; l < levels; ++l) {
    const double m = rep.mean_abs_derivative[l];
    positive = positive && m > 0.0;
    if (l + 1 < levels) rep.level_ratios.push_back(m > 0.0 ? rep.mean_abs_derivative[l + 1] / m : 0.0);
  }
  if (positive && levels >= 2) {
    const auto fit = fit_slope(as_doubles(rep.levels), rep.mean_abs_derivative, FitKind::SemiLog);
    rep.fitted_ratio = std::exp(fit.slope);
    rep.r2 = fit.r2;
  }
  return rep;
}

std::vector<LevelledCoordinate> smoothed_fine_coordinates(const PathModel& model) {
  const std::size_t n = model.grid().steps();
  if (!model.grid().dyadic()) throw ParameterError("decay probe: needs a dyadic grid");
  std::vector<LevelledCoordinate> out;
  auto add_block = [&](std::size_t offset) {
    for (std::size_t i = 0; i + 1 < n; ++i) out.push_back({offset + i, haar_index(i).n});
  };
  if (dynamic_cast<const GbmPathModel*>(&model)) {
    const std::size_t d = model.assets();
    for (std::size_t k = 0; k < d; ++k) add_block(d - 1 + k * (n - 1));
  } else if (const auto* h = dynamic_cast<const HestonPathModel*>(&model)) {
    add_block(0);
    for (std::size_t f = 0; f < h->vol_factors(); ++f) add_block(n - 1 + f * n + 1);
  } else {
    throw ParameterError("decay probe: unsupported model " + model.describe());
  }
  return out;
}

DecayProbeReport derivative_decay_probe(const PricingPlan& plan_in, int max_levels,
                                        std::size_t n_probe_points, std::uint64_t seed) {
  PricingPlan plan = plan_in;
  plan.integrand = IntegrandKind::Smoothed;
  plan.validate();
  auto coords = smoothed_fine_coordinates(*plan.model);
  std::erase_if(coords, [&](const LevelledCoordinate& c) { return c.level >= max_levels; });
  const PlanIntegrand in = make_integrand(plan);
  return derivative_decay_probe(in.f, in.dim, coords, n_probe_points, seed);
}

StudyResult to_study(const DecayProbeReport& rep) {
  StudyResult r;
  r.kind = "decay-probe";
  r.axis_name = "level";
  r.metric_name = "mean_abs_derivative";
  r.aux_name = "ratio_to_previous";
  StudySeries s;
  s.label = "fine-coordinates";
  for (std::size_t l = 0; l < rep.levels.size(); ++l) {
    s.axis.push_back(rep.levels[l]);
    s.metric.push_back(rep.mean_abs_derivative[l]);
    s.aux.push_back(l == 0 ? 0.0 : rep.level_ratios[l - 1]);
  }
  if (rep.fitted_ratio > 0.0)
    s.fit = SlopeFit{FitKind::SemiLog, std::log(rep.fitted_ratio), 0.0, rep.r2};
  r.series.push_back(std::move(s));
  r.metadata["fitted_ratio"] = std::to_string(rep.fitted_ratio);
  r.metadata["probe_points"] = std::to_string(rep.probe_points);
  return r;
}

}  // namespace smoothquad
