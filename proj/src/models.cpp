#include "smoothquad/models.hpp"

#include "smoothquad/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace smoothquad {

namespace {

constexpr double kCorrTol = 1e-12;

struct VariancePath {
  std::vector<double> var_left;    // variance entering the price diffusion at step n
  std::vector<double> corr_noise;  // sqrt(V_n) dW^v_n as seen by the price
  double terminal = 0.0;
};

double euler_f1(VolScheme s, double v) { return s == VolScheme::Reflection ? std::abs(v) : v; }
double euler_f2(VolScheme s, double v) {
  switch (s) {
    case VolScheme::FullTruncation: return std::max(v, 0.0);
    case VolScheme::Reflection: return std::abs(v);
    default: return v;
  }
}
double euler_f3(VolScheme s, double v) {
  return s == VolScheme::Reflection ? std::abs(v) : std::max(v, 0.0);
}

// dw_vol is process-major: factor i occupies [i*N, (i+1)*N).
void simulate_variance(const HestonSpec& spec, const PathGrid& grid, std::span<const double> dw_vol,
                       std::size_t factors, VariancePath& out, PathDiagnostics* diag) {
  const std::size_t n = grid.steps();
  const double dt = grid.dt();
  out.var_left.resize(n);
  out.corr_noise.resize(n);
  switch (spec.scheme) {
    case VolScheme::FullTruncation:
    case VolScheme::PartialTruncation:
    case VolScheme::Reflection: {
      double v = spec.v0;
      for (std::size_t k = 0; k < n; ++k) {
        const double vd = euler_f3(spec.scheme, v);
        out.var_left[k] = vd;
        out.corr_noise[k] = std::sqrt(vd) * dw_vol[k];
        v = euler_f1(spec.scheme, v) + spec.kappa * (spec.theta - euler_f2(spec.scheme, v)) * dt +
            spec.xi * std::sqrt(vd) * dw_vol[k];
      }
      out.terminal = euler_f3(spec.scheme, v);
      break;
    }
    case VolScheme::ABR: {
      double v = spec.v0;
      for (std::size_t k = 0; k < n; ++k) {
        out.var_left[k] = v;
        out.corr_noise[k] = std::sqrt(v) * dw_vol[k];
        v = abr_vol_step(spec, v, dw_vol[k], dt);
      }
      out.terminal = v;
      break;
    }
    case VolScheme::OUBased: {
      const auto ou = ou_vol_path(OuParams::from(spec), grid, dw_vol, factors, spec.v0, diag);
      std::copy_n(ou.variance.begin(), n, out.var_left.begin());
      out.corr_noise = ou.sqrt_v_dw;
      out.terminal = ou.variance[n];
      break;
    }
  }
}

}  // namespace

// ---------------------------------------------------------------- GBM

void GbmSpec::validate() const {
  const std::size_t d = x0.size();
  if (d == 0) throw ParameterError("gbm: at least one asset required");
  if (sigma.size() != d) throw ParameterError("gbm: sigma must have one entry per asset");
  if (!drift.empty() && drift.size() != d)
    throw ParameterError("gbm: drift must be empty or have one entry per asset");
  for (std::size_t j = 0; j < d; ++j) {
    if (!(x0[j] > 0.0) || !std::isfinite(x0[j])) throw ParameterError("gbm: x0 must be > 0");
    if (!(sigma[j] > 0.0) || !std::isfinite(sigma[j]))
      throw ParameterError("gbm: sigma must be > 0");
  }
  if (corr.rows() != static_cast<Eigen::Index>(d) || corr.cols() != static_cast<Eigen::Index>(d))
    throw ParameterError("gbm: corr must be d x d");
  for (Eigen::Index i = 0; i < corr.rows(); ++i) {
    if (std::abs(corr(i, i) - 1.0) > kCorrTol) throw ParameterError("gbm: corr diagonal must be 1");
    for (Eigen::Index j = 0; j < i; ++j)
      if (std::abs(corr(i, j) - corr(j, i)) > kCorrTol)
        throw ParameterError("gbm: corr must be symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
  if (eig.eigenvalues().minCoeff() < -1e-10)
    throw ParameterError("gbm: corr must be positive semidefinite");
}

Eigen::MatrixXd GbmSpec::correlation_factor() const {
  const auto d = corr.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double s = corr(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        l(i, i) = s > 0.0 ? std::sqrt(s) : 0.0;
      } else {
        l(i, j) = l(j, j) > 0.0 ? s / l(j, j) : 0.0;
      }
    }
  }
  return l;
}

GbmSpec GbmSpec::single(double x0, double sigma, double drift) {
  return GbmSpec{{x0}, {sigma}, Eigen::MatrixXd::Identity(1, 1), {drift}};
}

GbmSpec GbmSpec::uniform(std::size_t d, double x0, double sigma, double rho) {
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd corr = Eigen::MatrixXd::Constant(n, n, rho);
  corr.diagonal().setOnes();
  return GbmSpec{std::vector<double>(d, x0), std::vector<double>(d, sigma), corr, {}};
}

std::vector<double> gbm_terminal(const GbmSpec& spec, const PathGrid& grid,
                                 const Eigen::MatrixXd& increments, PathDiagnostics* diag) {
  const std::size_t d = spec.assets();
  const std::size_t n = grid.steps();
  if (increments.rows() != static_cast<Eigen::Index>(d) ||
      increments.cols() != static_cast<Eigen::Index>(n))
    throw InputShapeError("gbm_terminal: increments must be d x N");
  std::vector<double> out(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double mu = spec.drift.empty() ? 0.0 : spec.drift[j];
    double x = spec.x0[j];
    for (std::size_t k = 0; k < n; ++k) {
      const double f = 1.0 + mu * grid.dt() +
                       spec.sigma[j] * increments(static_cast<Eigen::Index>(j),
                                                  static_cast<Eigen::Index>(k));
      if (f < 0.0 && diag) ++diag->negative_factors;
      x *= f;
    }
    out[j] = x;
  }
  return out;
}

// ---------------------------------------------------------------- Heston

std::string to_string(VolScheme s) {
  switch (s) {
    case VolScheme::FullTruncation: return "full-truncation";
    case VolScheme::PartialTruncation: return "partial-truncation";
    case VolScheme::Reflection: return "reflection";
    case VolScheme::ABR: return "abr";
    case VolScheme::OUBased: return "ou-based";
  }
  return "unknown";
}

VolScheme vol_scheme_from_string(const std::string& s) {
  for (auto v : {VolScheme::FullTruncation, VolScheme::PartialTruncation, VolScheme::Reflection,
                 VolScheme::ABR, VolScheme::OUBased})
    if (to_string(v) == s) return v;
  throw ParameterError("unknown variance scheme '" + s + "'");
}

void HestonSpec::validate() const {
  if (!(s0 > 0.0)) throw ParameterError("heston: s0 must be > 0");
  if (!(v0 >= 0.0)) throw ParameterError("heston: v0 must be >= 0");
  if (!(rho > -1.0 && rho < 1.0)) throw ParameterError("heston: rho must lie in (-1, 1)");
  if (!(kappa >= 0.0)) throw ParameterError("heston: kappa must be >= 0");
  if (!(theta >= 0.0)) throw ParameterError("heston: theta must be >= 0");
  if (!(xi >= 0.0)) throw ParameterError("heston: xi must be >= 0");
  if (!std::isfinite(mu)) throw ParameterError("heston: mu must be finite");
  if (scheme == VolScheme::OUBased) {
    if (!(xi > 0.0)) throw ParameterError("heston: ou-based scheme requires xi > 0");
    if (!(kappa > 0.0) || !(theta > 0.0))
      throw ParameterError("heston: ou-based scheme requires kappa, theta > 0");
  }
}

OuParams OuParams::from(const HestonSpec& spec) {
  if (!(spec.xi > 0.0)) throw ParameterError("ou params: xi = 0 gives a degenerate beta");
  OuParams p;
  p.alpha = -spec.kappa / 2.0;
  p.beta = spec.xi / 2.0;
  p.n_star = 4.0 * spec.theta * spec.kappa / (spec.xi * spec.xi);
  // Snap values within rounding of an integer so n* = 1 stays single-branch.
  const double nearest = std::round(p.n_star);
  const double snapped = std::abs(p.n_star - nearest) < 1e-9 ? nearest : p.n_star;
  p.n_low = static_cast<int>(std::floor(snapped));
  p.p = snapped - p.n_low;
  return p;
}

std::size_t vol_factor_count(const HestonSpec& spec, std::optional<int> ou_processes) {
  if (spec.scheme != VolScheme::OUBased) return 1;
  const int n = ou_processes ? *ou_processes : OuParams::from(spec).n_low;
  if (n < 1)
    throw ParameterError("heston: ou-based scheme needs at least one OU process (n* >= 1)");
  return static_cast<std::size_t>(n);
}

double abr_vol_step(const HestonSpec& spec, double v, double dw_v, double dt) {
  if (!(dt > 0.0)) throw ParameterError("abr_vol_step: dt must be > 0");
  const double decay = std::exp(-spec.kappa * dt);
  const double mean = decay * v + (1.0 - decay) * spec.theta;
  if (mean <= 0.0) return 0.0;
  // (1 - e^{-2 kappa dt}) / kappa, continuous at kappa = 0.
  const double damp = spec.kappa > 0.0 ? -std::expm1(-2.0 * spec.kappa * dt) / spec.kappa : 2.0 * dt;
  const double gamma2 = std::log1p(0.5 * spec.xi * spec.xi * v * damp / (mean * mean)) / dt;
  return mean * std::exp(-0.5 * gamma2 * dt + std::sqrt(gamma2) * dw_v);
}

OuVolPath ou_vol_path(const OuParams& params, const PathGrid& grid, std::span<const double> dw,
                      std::size_t n_processes, double v0, PathDiagnostics* diag) {
  const std::size_t n = grid.steps();
  if (n_processes == 0) throw ParameterError("ou_vol_path: at least one process required");
  if (dw.size() != n_processes * n)
    throw InputShapeError("ou_vol_path: expected n_processes x N increments");
  const double dt = grid.dt();
  std::vector<double> x(n_processes, 0.0);
  x[0] = std::sqrt(v0);

  OuVolPath out;
  out.variance.resize(n + 1);
  out.driving.resize(n);
  out.sqrt_v_dw.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    double y = 0.0, sxdw = 0.0;
    for (std::size_t i = 0; i < n_processes; ++i) {
      y += x[i] * x[i];
      sxdw += x[i] * dw[i * n + k];
    }
    out.variance[k] = y;
    out.sqrt_v_dw[k] = sxdw;
    if (y > 0.0) {
      out.driving[k] = sxdw / std::sqrt(y);
    } else {
      // Any N(0, dt) increment independent of the past keeps W~ Brownian.
      out.driving[k] = dw[k];
      if (diag) ++diag->zero_variance_fallbacks;
    }
    for (std::size_t i = 0; i < n_processes; ++i)
      x[i] += params.alpha * x[i] * dt + params.beta * dw[i * n + k];
  }
  double y = 0.0;
  for (double xi : x) y += xi * xi;
  out.variance[n] = y;
  return out;
}

double ou_noninteger_price(const OuParams& params, const std::function<double(int)>& estimate) {
  if (params.p == 0.0) return estimate(params.n_low);
  return (1.0 - params.p) * estimate(params.n_low) + params.p * estimate(params.n_low + 1);
}

HestonTerminal heston_terminal(const HestonSpec& spec, const PathGrid& grid,
                               std::span<const double> dw_price, std::span<const double> dw_vol,
                               std::optional<int> ou_processes, PathDiagnostics* diag) {
  const std::size_t n = grid.steps();
  const std::size_t factors = vol_factor_count(spec, ou_processes);
  if (dw_price.size() != n) throw InputShapeError("heston_terminal: dw_price must have N entries");
  if (dw_vol.size() != factors * n)
    throw InputShapeError("heston_terminal: dw_vol must have factors x N entries");
  VariancePath vp;
  simulate_variance(spec, grid, dw_vol, factors, vp, diag);
  const double rho_perp = std::sqrt(1.0 - spec.rho * spec.rho);
  double s = spec.s0;
  for (std::size_t k = 0; k < n; ++k) {
    const double f = 1.0 + spec.mu * grid.dt() + spec.rho * vp.corr_noise[k] +
                     rho_perp * std::sqrt(vp.var_left[k]) * dw_price[k];
    if (f < 0.0 && diag) ++diag->negative_factors;
    s *= f;
  }
  return {s, vp.terminal};
}

// ---------------------------------------------------------------- ConditionalPath

void ConditionalPath::resize(std::size_t d, std::size_t n) {
  assets = d;
  steps = n;
  x0.resize(d);
  a.resize(d * n);
  b.resize(d * n);
}

double ConditionalPath::terminal(std::size_t j, double y) const {
  double x = x0[j];
  const double* aj = a.data() + j * steps;
  const double* bj = b.data() + j * steps;
  for (std::size_t k = 0; k < steps; ++k) x *= aj[k] + bj[k] * y;
  return x;
}

std::pair<double, double> ConditionalPath::terminal_with_derivative(std::size_t j,
                                                                    double y) const {
  double x = x0[j];
  double dx = 0.0;
  const double* aj = a.data() + j * steps;
  const double* bj = b.data() + j * steps;
  for (std::size_t k = 0; k < steps; ++k) {
    const double f = aj[k] + bj[k] * y;
    dx = dx * f + x * bj[k];
    x *= f;
  }
  return {x, dx};
}

std::vector<double> PathModel::coarsen(std::span<const double>) const {
  throw ParameterError("coarsen: not supported by " + describe());
}

// ---------------------------------------------------------------- GbmPathModel

GbmPathModel::GbmPathModel(GbmSpec spec, PathGrid grid)
    : spec_(std::move(spec)),
      grid_(grid),
      rot_(build_rotation(grid.assets())),
      bridge_(grid) {
  spec_.validate();
  if (spec_.assets() != grid_.assets())
    throw ParameterError("gbm: grid asset count does not match the model");
  chol_ = spec_.correlation_factor();
}

std::string GbmPathModel::describe() const {
  std::ostringstream os;
  os << "gbm(d=" << grid_.assets() << ", N=" << grid_.steps() << ", T=" << grid_.horizon() << ")";
  return os.str();
}

void GbmPathModel::conditional(std::span<const double> rest, ConditionalPath& out,
                               PathDiagnostics*) const {
  const std::size_t d = grid_.assets();
  const std::size_t n = grid_.steps();
  if (rest.size() + 1 != dim()) throw InputShapeError("gbm conditional: wrong coordinate count");
  const double dt = grid_.dt();
  const double lin = dt / std::sqrt(grid_.horizon());

  thread_local std::vector<double> base;
  thread_local std::vector<double> slope;
  base.assign(d * n, 0.0);
  slope.assign(d, 0.0);
  const auto y_rest = rest.subspan(0, d - 1);
  for (std::size_t k = 0; k < d; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    double z1_rest = 0.0;
    for (std::size_t i = 1; i < d; ++i)
      z1_rest += rot_.a_inv(kk, static_cast<Eigen::Index>(i)) * y_rest[i - 1];
    slope[k] = rot_.a_inv(kk, 0) * lin;
    std::span<double> row(base.data() + k * n, n);
    bridge_.increments(0.0, rest.subspan(d - 1 + k * (n - 1), n - 1), row);
    for (double& v : row) v += z1_rest * lin;
  }

  out.resize(d, n);
  for (std::size_t j = 0; j < d; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double mu = spec_.drift.empty() ? 0.0 : spec_.drift[j];
    const double sig = spec_.sigma[j];
    double b = 0.0;
    for (std::size_t k = 0; k <= j; ++k) b += chol_(jj, static_cast<Eigen::Index>(k)) * slope[k];
    out.x0[j] = spec_.x0[j];
    for (std::size_t t = 0; t < n; ++t) {
      double w = 0.0;
      for (std::size_t k = 0; k <= j; ++k)
        w += chol_(jj, static_cast<Eigen::Index>(k)) * base[k * n + t];
      out.a[j * n + t] = 1.0 + mu * dt + sig * w;
      out.b[j * n + t] = sig * b;
    }
  }
}

std::unique_ptr<PathModel> GbmPathModel::with_steps(std::size_t steps) const {
  return std::make_unique<GbmPathModel>(spec_, grid_.with_steps(steps));
}

Eigen::MatrixXd GbmPathModel::increments(std::span<const double> coords) const {
  const std::size_t d = grid_.assets();
  const std::size_t n = grid_.steps();
  if (coords.size() != dim()) throw InputShapeError("gbm increments: wrong coordinate count");
  const auto z1 = coarse_from_rotated(coords[0], coords.subspan(1, d - 1), rot_);
  Eigen::MatrixXd indep(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < d; ++k) {
    const auto inc = bridge_.increments(z1[k], coords.subspan(d + k * (n - 1), n - 1));
    for (std::size_t t = 0; t < n; ++t)
      indep(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = inc[t];
  }
  return chol_ * indep;
}

std::vector<double> GbmPathModel::coarsen(std::span<const double> coords) const {
  const std::size_t d = grid_.assets();
  const std::size_t n = grid_.steps();
  if (coords.size() != dim()) throw InputShapeError("gbm coarsen: wrong coordinate count");
  if (n < 2 || !grid_.dyadic()) throw ParameterError("gbm coarsen: needs a dyadic grid with N >= 2");
  const std::size_t half = n / 2;
  std::vector<double> out(coords.begin(), coords.begin() + static_cast<std::ptrdiff_t>(d));
  for (std::size_t k = 0; k < d; ++k) {
    const auto block = coords.subspan(d + k * (n - 1), half - 1);
    out.insert(out.end(), block.begin(), block.end());
  }
  return out;
}

// ---------------------------------------------------------------- HestonPathModel

HestonPathModel::HestonPathModel(HestonSpec spec, PathGrid grid, std::optional<int> ou_processes)
    : spec_(spec),
      grid_(grid),
      ou_processes_(ou_processes),
      vol_factors_(0),
      bridge_(grid) {
  spec_.validate();
  if (grid_.assets() != 1) throw ParameterError("heston: single-asset model");
  vol_factors_ = vol_factor_count(spec_, ou_processes_);
}

std::string HestonPathModel::describe() const {
  std::ostringstream os;
  os << "heston(" << to_string(spec_.scheme) << ", N=" << grid_.steps()
     << ", vol factors=" << vol_factors_ << ")";
  return os.str();
}

void HestonPathModel::conditional(std::span<const double> rest, ConditionalPath& out,
                                  PathDiagnostics* diag) const {
  const std::size_t n = grid_.steps();
  if (rest.size() + 1 != dim()) throw InputShapeError("heston conditional: wrong coordinate count");
  thread_local std::vector<double> dw_vol;
  thread_local std::vector<double> db;
  thread_local VariancePath vp;
  dw_vol.resize(vol_factors_ * n);
  db.resize(n);
  bridge_.increments(0.0, rest.subspan(0, n - 1), db);
  for (std::size_t i = 0; i < vol_factors_; ++i) {
    const auto block = rest.subspan(n - 1 + i * n, n);
    bridge_.increments(block[0], block.subspan(1), std::span<double>(dw_vol.data() + i * n, n));
  }
  simulate_variance(spec_, grid_, dw_vol, vol_factors_, vp, diag);

  const double dt = grid_.dt();
  const double lin = dt / std::sqrt(grid_.horizon());
  const double rho_perp = std::sqrt(1.0 - spec_.rho * spec_.rho);
  out.resize(1, n);
  out.x0[0] = spec_.s0;
  for (std::size_t k = 0; k < n; ++k) {
    const double vol = rho_perp * std::sqrt(vp.var_left[k]);
    out.a[k] = 1.0 + spec_.mu * dt + spec_.rho * vp.corr_noise[k] + vol * db[k];
    out.b[k] = vol * lin;
  }
}

std::unique_ptr<PathModel> HestonPathModel::with_steps(std::size_t steps) const {
  return std::make_unique<HestonPathModel>(spec_, grid_.with_steps(steps), ou_processes_);
}

std::vector<double> HestonPathModel::coarsen(std::span<const double> coords) const {
  const std::size_t n = grid_.steps();
  if (coords.size() != dim()) throw InputShapeError("heston coarsen: wrong coordinate count");
  if (n < 2 || !grid_.dyadic())
    throw ParameterError("heston coarsen: needs a dyadic grid with N >= 2");
  const std::size_t half = n / 2;
  std::vector<double> out(coords.begin(), coords.begin() + static_cast<std::ptrdiff_t>(half));
  for (std::size_t i = 0; i < vol_factors_; ++i) {
    const auto block = coords.subspan(n + i * n, half);
    out.insert(out.end(), block.begin(), block.end());
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> HestonPathModel::increments(
    std::span<const double> coords) const {
  const std::size_t n = grid_.steps();
  if (coords.size() != dim()) throw InputShapeError("heston increments: wrong coordinate count");
  std::vector<double> dw_price = bridge_.increments(coords[0], coords.subspan(1, n - 1));
  std::vector<double> dw_vol(vol_factors_ * n);
  for (std::size_t i = 0; i < vol_factors_; ++i) {
    const auto block = coords.subspan(n + i * n, n);
    bridge_.increments(block[0], block.subspan(1), std::span<double>(dw_vol.data() + i * n, n));
  }
  return {std::move(dw_price), std::move(dw_vol)};
}

}  // namespace smoothquad
