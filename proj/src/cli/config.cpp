#include "smoothquad/cli.hpp"

#include "smoothquad/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace smoothquad::cli {

namespace {

constexpr const char* kReferenceGbm =
    "model: {type: gbm, steps: 8, horizon: 1.0, x0: 100, sigma: 0.4}\n";
constexpr const char* kReferenceHeston =
    "model: {type: heston, steps: 8, horizon: 1.0, s0: 100, v0: 0.04, mu: 0, rho: -0.9,\n"
    "        kappa: 1, theta: 0.0025, xi: 0.1, scheme: ou-based}\n";

std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

void check_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError(where.empty() ? "config" : where, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) throw ConfigError(join(where, key), "unknown key");
  }
}

template <class T>
T get(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(field, "has the wrong type");
  }
}

template <class T>
T get_or(const YAML::Node& map, const std::string& where, const std::string& key, T fallback) {
  const auto n = map[key];
  return n ? get<T>(n, join(where, key)) : fallback;
}

double positive(double v, const std::string& field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(field, "must be positive");
  return v;
}

std::size_t count(const YAML::Node& map, const std::string& where, const std::string& key,
                  std::size_t fallback, std::size_t min = 1) {
  const auto n = map[key];
  if (!n) return fallback;
  const auto v = get<long long>(n, join(where, key));
  if (v < static_cast<long long>(min))
    throw ConfigError(join(where, key), "must be >= " + std::to_string(min));
  return static_cast<std::size_t>(v);
}

// Scalar or list; a scalar is broadcast to `size` entries.
std::vector<double> vec_or_scalar(const YAML::Node& n, const std::string& field, std::size_t size) {
  if (n.IsSequence()) {
    auto v = get<std::vector<double>>(n, field);
    if (size != 0 && v.size() != size)
      throw ConfigError(field, "expected " + std::to_string(size) + " entries");
    return v;
  }
  return std::vector<double>(std::max<std::size_t>(size, 1), get<double>(n, field));
}

template <class T>
std::vector<T> sequence(const YAML::Node& map, const std::string& where, const std::string& key) {
  const auto n = map[key];
  if (!n) return {};
  if (!n.IsSequence()) throw ConfigError(join(where, key), "expected a list");
  return get<std::vector<T>>(n, join(where, key));
}

// Shallow merge: keys of `over` replace those of `base`.
YAML::Node merged(const YAML::Node& base, const YAML::Node& over) {
  YAML::Node out = YAML::Clone(base);
  if (over)
    for (const auto& kv : over) out[kv.first.as<std::string>()] = YAML::Clone(kv.second);
  return out;
}

std::shared_ptr<const PathModel> parse_model(const YAML::Node& m) {
  if (!m) throw ConfigError("model", "is required");
  const auto type = get_or<std::string>(m, "model", "type", "");
  const std::size_t steps = count(m, "model", "steps", 8);
  const double horizon = positive(get_or(m, "model", "horizon", 1.0), "model.horizon");

  if (type == "gbm") {
    check_keys(m, "model", {"type", "steps", "horizon", "assets", "x0", "sigma", "rho", "corr", "drift"});
    std::size_t d = count(m, "model", "assets", 0, 0);
    if (!m["sigma"]) throw ConfigError("model.sigma", "is required");
    if (d == 0 && m["x0"] && m["x0"].IsSequence()) d = m["x0"].size();
    if (d == 0 && m["sigma"].IsSequence()) d = m["sigma"].size();
    if (d == 0) d = 1;
    GbmSpec spec;
    spec.x0 = m["x0"] ? vec_or_scalar(m["x0"], "model.x0", d) : std::vector<double>(d, 100.0);
    spec.sigma = vec_or_scalar(m["sigma"], "model.sigma", d);
    for (double v : spec.x0) positive(v, "model.x0");
    for (double v : spec.sigma) positive(v, "model.sigma");
    if (m["drift"]) spec.drift = vec_or_scalar(m["drift"], "model.drift", d);
    const auto n = static_cast<Eigen::Index>(d);
    if (m["corr"]) {
      const auto rows = get<std::vector<std::vector<double>>>(m["corr"], "model.corr");
      if (rows.size() != d) throw ConfigError("model.corr", "expected a " + std::to_string(d) + "x" + std::to_string(d) + " matrix");
      spec.corr.resize(n, n);
      for (std::size_t i = 0; i < d; ++i) {
        if (rows[i].size() != d) throw ConfigError("model.corr", "expected a square matrix");
        for (std::size_t j = 0; j < d; ++j)
          spec.corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
    } else {
      const double rho = get_or(m, "model", "rho", 0.0);
      if (!(rho > -1.0 && rho < 1.0)) throw ConfigError("model.rho", "must lie in (-1, 1)");
      spec.corr = Eigen::MatrixXd::Constant(n, n, rho);
      spec.corr.diagonal().setOnes();
    }
    try {
      spec.validate();
      return std::make_shared<GbmPathModel>(spec, PathGrid(steps, horizon, d));
    } catch (const ParameterError& e) {
      throw ConfigError("model", e.what());
    }
  }
  if (type == "heston") {
    check_keys(m, "model", {"type", "steps", "horizon", "s0", "v0", "mu", "rho", "kappa", "theta",
                            "xi", "scheme", "ou_processes"});
    HestonSpec spec;
    spec.s0 = positive(get_or(m, "model", "s0", spec.s0), "model.s0");
    spec.v0 = get_or(m, "model", "v0", spec.v0);
    if (!(spec.v0 >= 0.0)) throw ConfigError("model.v0", "must be >= 0");
    spec.mu = get_or(m, "model", "mu", spec.mu);
    spec.rho = get_or(m, "model", "rho", spec.rho);
    if (!(spec.rho > -1.0 && spec.rho < 1.0)) throw ConfigError("model.rho", "must lie in (-1, 1)");
    spec.kappa = get_or(m, "model", "kappa", spec.kappa);
    spec.theta = get_or(m, "model", "theta", spec.theta);
    spec.xi = get_or(m, "model", "xi", spec.xi);
    for (const auto& [key, v] : {std::pair{"kappa", spec.kappa}, {"theta", spec.theta}, {"xi", spec.xi}})
      if (!(v >= 0.0)) throw ConfigError(std::string("model.") + key, "must be >= 0");
    try {
      spec.scheme = vol_scheme_from_string(get_or<std::string>(m, "model", "scheme", "ou-based"));
    } catch (const ParameterError& e) {
      throw ConfigError("model.scheme", e.what());
    }
    std::optional<int> ou;
    if (m["ou_processes"]) ou = static_cast<int>(count(m, "model", "ou_processes", 1));
    try {
      spec.validate();
      return std::make_shared<HestonPathModel>(spec, PathGrid(steps, horizon), ou);
    } catch (const ParameterError& e) {
      throw ConfigError("model", e.what());
    }
  }
  throw ConfigError("model.type", "must be 'gbm' or 'heston'");
}

PayoffSpec parse_payoff(const YAML::Node& p, std::size_t assets) {
  if (!p) throw ConfigError("payoff", "is required");
  check_keys(p, "payoff", {"type", "strike", "weights"});
  const auto type = get_or<std::string>(p, "payoff", "type", "");
  if (!p["strike"]) throw ConfigError("payoff.strike", "is required");
  const double strike = get<double>(p["strike"], "payoff.strike");
  if (!std::isfinite(strike)) throw ConfigError("payoff.strike", "must be finite");
  if (type == "call" || type == "digital" || type == "put") {
    if (assets != 1) throw ConfigError("payoff.type", "'" + type + "' needs a single-asset model");
    return type == "call" ? make_call(strike) : type == "digital" ? make_digital(strike) : make_put(strike);
  }
  if (type == "basket-call" || type == "basket-digital") {
    std::vector<double> w = p["weights"] ? vec_or_scalar(p["weights"], "payoff.weights", assets)
                                         : std::vector<double>(assets, 1.0 / static_cast<double>(assets));
    for (double v : w) positive(v, "payoff.weights");
    return type == "basket-call" ? make_basket_call(w, strike) : make_basket_digital(w, strike);
  }
  throw ConfigError("payoff.type", "must be one of call, digital, put, basket-call, basket-digital");
}

void parse_method(const YAML::Node& m, PricingPlan& plan) {
  if (!m) return;
  check_keys(m, "method", {"name", "integrand", "richardson", "budget", "tol", "work_normalized",
                           "points", "shifts", "samples", "batch"});
  try {
    plan.method = method_from_string(get_or<std::string>(m, "method", "name", "asgq"));
  } catch (const ParameterError& e) {
    throw ConfigError("method.name", e.what());
  }
  try {
    plan.integrand = integrand_from_string(get_or<std::string>(m, "method", "integrand", "smoothed"));
  } catch (const ParameterError& e) {
    throw ConfigError("method.integrand", e.what());
  }
  plan.richardson_level = get_or(m, "method", "richardson", 0);
  if (plan.richardson_level != 0 && plan.richardson_level != 1)
    throw ConfigError("method.richardson", "must be 0 or 1");
  plan.asgq.max_evaluations = count(m, "method", "budget", plan.asgq.max_evaluations);
  plan.asgq.tol = get_or(m, "method", "tol", plan.asgq.tol);
  if (!(plan.asgq.tol >= 0.0)) throw ConfigError("method.tol", "must be >= 0");
  plan.asgq.work_normalized_profit = get_or(m, "method", "work_normalized", false);
  plan.lattice.n_points = count(m, "method", "points", plan.lattice.n_points);
  plan.lattice.n_shifts = count(m, "method", "shifts", plan.lattice.n_shifts, 2);
  plan.mc.n_samples = count(m, "method", "samples", plan.mc.n_samples, 2);
  plan.mc.batch_size = count(m, "method", "batch", plan.mc.batch_size);
}

void parse_smoothing(const YAML::Node& s, SmoothingConfig& cfg) {
  if (!s) return;
  check_keys(s, "smoothing", {"m_lag", "tol_newton", "m_leg", "root_offset", "scan_points"});
  cfg.m_lag = count(s, "smoothing", "m_lag", cfg.m_lag);
  cfg.tol_newton = positive(get_or(s, "smoothing", "tol_newton", cfg.tol_newton), "smoothing.tol_newton");
  cfg.m_leg = count(s, "smoothing", "m_leg", cfg.m_leg);
  cfg.root_offset = get_or(s, "smoothing", "root_offset", cfg.root_offset);
  cfg.multi_root_scan_points = count(s, "smoothing", "scan_points", cfg.multi_root_scan_points, 2);
  try {
    cfg.validate();
  } catch (const ParameterError& e) {
    throw ConfigError("smoothing", e.what());
  }
}

void parse_study(const YAML::Node& s, StudySettings& st) {
  if (!s) return;
  check_keys(s, "study", {"reference", "budgets", "samples", "steps", "couple_exact", "ci_factor",
                          "directions", "k_max", "m_lag_grid", "tol_grid", "offset_grid",
                          "levels", "probe_points", "decompose"});
  if (s["reference"]) st.reference = get<double>(s["reference"], "study.reference");
  st.budgets = sequence<std::size_t>(s, "study", "budgets");
  st.samples = sequence<std::size_t>(s, "study", "samples");
  st.steps = sequence<std::size_t>(s, "study", "steps");
  st.couple_exact = get_or(s, "study", "couple_exact", st.couple_exact);
  st.ci_factor = get_or(s, "study", "ci_factor", st.ci_factor);
  st.directions = sequence<std::size_t>(s, "study", "directions");
  st.k_max = static_cast<int>(count(s, "study", "k_max", static_cast<std::size_t>(st.k_max)));
  st.m_lag_grid = sequence<std::size_t>(s, "study", "m_lag_grid");
  st.tol_grid = sequence<double>(s, "study", "tol_grid");
  st.offset_grid = sequence<double>(s, "study", "offset_grid");
  st.max_levels = static_cast<int>(count(s, "study", "levels", static_cast<std::size_t>(st.max_levels)));
  st.probe_points = count(s, "study", "probe_points", st.probe_points);
  st.decompose = get_or(s, "study", "decompose", st.decompose);
}

void require(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw ConfigError(field, msg);
}

void check_study(const RunConfig& c) {
  const auto& s = c.study;
  const bool gbm1 = dynamic_cast<const GbmPathModel*>(c.plan.model.get()) && c.plan.model->assets() == 1;
  switch (c.kind) {
    case ExperimentKind::Price:
      require(!s.decompose || s.reference.has_value(), "study.reference", "is required with decompose");
      break;
    case ExperimentKind::QuadStudy:
      require(!s.budgets.empty(), "study.budgets", "is required for quad-study");
      require(s.reference.has_value(), "study.reference", "is required for quad-study");
      require(c.plan.method == Method::ASGQ, "method.name", "quad-study needs asgq");
      break;
    case ExperimentKind::StatStudy:
      require(!s.samples.empty(), "study.samples", "is required for stat-study");
      require(c.plan.method != Method::ASGQ, "method.name", "stat-study needs mc or rqmc");
      break;
    case ExperimentKind::WeakError:
      require(!s.steps.empty(), "study.steps", "is required for weak-error");
      require(s.reference.has_value(), "study.reference", "is required for weak-error");
      require(!s.couple_exact || (gbm1 && c.plan.method == Method::MC), "study.couple_exact",
              "needs a single-asset gbm model and the mc method");
      break;
    case ExperimentKind::MixedDiff:
      require(!s.directions.empty(), "study.directions", "is required for mixed-diff");
      break;
    case ExperimentKind::SmoothingStudy:
      require(!s.m_lag_grid.empty() || !s.tol_grid.empty() || !s.offset_grid.empty(), "study",
              "smoothing-study needs m_lag_grid, tol_grid or offset_grid");
      break;
    case ExperimentKind::DecayProbe:
      require(c.plan.integrand == IntegrandKind::Smoothed, "method.integrand",
              "decay-probe needs the smoothed integrand");
      require(c.plan.model->grid().dyadic(), "model.steps", "decay-probe needs a power-of-two step count");
      break;
  }
}

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Price: return "price";
    case ExperimentKind::QuadStudy: return "quad-study";
    case ExperimentKind::StatStudy: return "stat-study";
    case ExperimentKind::WeakError: return "weak-error";
    case ExperimentKind::MixedDiff: return "mixed-diff";
    case ExperimentKind::SmoothingStudy: return "smoothing-study";
    case ExperimentKind::DecayProbe: return "decay-probe";
  }
  return "?";
}

ExperimentKind experiment_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::Price, ExperimentKind::QuadStudy, ExperimentKind::StatStudy,
                 ExperimentKind::WeakError, ExperimentKind::MixedDiff, ExperimentKind::SmoothingStudy,
                 ExperimentKind::DecayProbe})
    if (to_string(k) == s) return k;
  throw ConfigError("experiment", "unknown kind '" + s + "'");
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = {
      {"digital-gbm", "single digital option under GBM", "sigma=0.4 r=0 T=1 S0=K=100", 0.42074, 0.0,
       std::string(kReferenceGbm) + "payoff: {type: digital, strike: 100}\n"},
      {"digital-heston", "single digital option under Heston",
       "v0=0.04 mu=0 rho=-0.9 kappa=1 xi=0.1 theta=0.0025 S0=K=100", 0.5146, 2.0e-5,
       std::string(kReferenceHeston) + "payoff: {type: digital, strike: 100}\n"},
      {"call-gbm", "single call option under GBM", "sigma=0.4 r=0 T=1 S0=K=100", 15.8519, 0.0,
       std::string(kReferenceGbm) + "payoff: {type: call, strike: 100}\n"},
      {"heston-call", "single call option under Heston",
       "v0=0.04 mu=0 rho=-0.9 kappa=1 xi=0.1 theta=0.0025 S0=K=100", 6.33254, 0.0,
       std::string(kReferenceHeston) + "payoff: {type: call, strike: 100}\n"},
      {"basket-gbm-4d", "4-asset basket call under GBM",
       "sigma=0.4 (all) rho=0.3 r=0 T=1 S0=K=100 c=1/4", 11.04, 1.0e-3,
       "model: {type: gbm, steps: 8, horizon: 1.0, assets: 4, x0: 100, sigma: 0.4, rho: 0.3}\n"
       "payoff: {type: basket-call, strike: 100, weights: [0.25, 0.25, 0.25, 0.25]}\n"},
  };
  return table;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  throw ConfigError("preset", "unknown preset '" + name + "'");
}

void list_presets(std::ostream& out) {
  out << "name            reference        parameters\n";
  for (const auto& p : presets()) {
    std::ostringstream ref;
    ref << p.reference;
    if (p.reference_error > 0.0) ref << " (" << p.reference_error << ")";
    out << p.name << std::string(16 - std::min<std::size_t>(15, p.name.size()), ' ') << ref.str()
        << std::string(17 - std::min<std::size_t>(16, ref.str().size()), ' ') << p.parameters << "  ["
        << p.description << "]\n";
  }
}

RunConfig parse_config(const std::string& text, const Overrides& ov) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("config", std::string("parse error: ") + e.what());
  }
  if (!root || root.IsNull()) throw ConfigError("config", "empty file");
  check_keys(root, "", {"experiment", "name", "preset", "seed", "threads", "format", "model", "payoff",
                        "method", "smoothing", "study"});

  RunConfig c;
  c.source = text;
  c.kind = experiment_from_string(get_or<std::string>(root, "", "experiment", "price"));
  c.name = get_or<std::string>(root, "", "name", to_string(c.kind));
  if (c.name.empty() || c.name.find('/') != std::string::npos)
    throw ConfigError("name", "must be a plain file name");

  YAML::Node model = root["model"], payoff = root["payoff"];
  std::optional<double> preset_reference;
  if (root["preset"]) {
    const auto& p = find_preset(get<std::string>(root["preset"], "preset"));
    const YAML::Node blocks = YAML::Load(p.blocks);
    model = merged(blocks["model"], model);
    payoff = merged(blocks["payoff"], payoff);
    preset_reference = p.reference;
  }

  c.plan.model = parse_model(model);
  c.plan.payoff = parse_payoff(payoff, c.plan.model->assets());
  parse_method(root["method"], c.plan);
  parse_smoothing(root["smoothing"], c.plan.smoothing);
  parse_study(root["study"], c.study);
  if (!c.study.reference) c.study.reference = preset_reference;

  c.seed = ov.seed ? *ov.seed : get_or<std::uint64_t>(root, "", "seed", 42);
  c.threads = ov.threads ? *ov.threads : count(root, "", "threads", 1);
  if (c.threads < 1) throw ConfigError("threads", "must be >= 1");
  const auto fmt = get_or<std::string>(root, "", "format", "csv");
  if (fmt != "csv" && fmt != "jsonl") throw ConfigError("format", "must be csv or jsonl");
  c.format = ov.format ? *ov.format : fmt == "csv" ? OutputFormat::Csv : OutputFormat::Jsonl;

  c.plan.mc.seed = c.seed;
  c.plan.lattice.seed = c.seed;
  c.plan.threads = c.plan.mc.threads = c.plan.lattice.threads = c.threads;
  try {
    c.plan.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("plan", e.what());
  }
  check_study(c);
  return c;
}

RunConfig load_config(const std::string& path, const Overrides& ov) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), ov);
}

}  // namespace smoothquad::cli
