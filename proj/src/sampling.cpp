#include "smoothquad/sampling.hpp"

#include "smoothquad/errors.hpp"
#include "smoothquad/parallel.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace smoothquad {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Running mean and sum of squared deviations (Welford), mergeable.
struct Moments {
  double n = 0.0, mean = 0.0, m2 = 0.0;

  void add(double x) {
    n += 1.0;
    const double delta = x - mean;
    mean += delta / n;
    m2 += delta * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.n == 0.0) return;
    const double total = n + o.n;
    const double delta = o.mean - mean;
    mean += delta * o.n / total;
    m2 += o.m2 + delta * delta * n * o.n / total;
    n = total;
  }
  double variance() const { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }
};

Estimate from_moments(const Moments& m) {
  Estimate e;
  e.value = m.mean;
  e.stat_error = 1.96 * std::sqrt(m.variance() / m.n);
  e.work = static_cast<std::size_t>(m.n);
  return e;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return splitmix64(seed ^ splitmix64(h));
}

void McConfig::validate() const {
  if (n_samples < 2) throw ParameterError("mc: n_samples must be >= 2");
  if (batch_size < 1) throw ParameterError("mc: batch_size must be >= 1");
}

namespace {

template <class PerSample>
std::vector<std::vector<Moments>> run_batches(std::size_t dim, const McConfig& cfg,
                                              std::size_t outputs, PerSample&& per_sample) {
  cfg.validate();
  if (dim == 0) throw ParameterError("mc: dim must be >= 1");
  const std::size_t batches = (cfg.n_samples + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<std::vector<Moments>> stats(batches, std::vector<Moments>(outputs));
  parallel_for(batches, cfg.threads, [&](std::size_t b) {
    std::mt19937_64 rng(derive_seed(cfg.seed, "mc-batch-" + std::to_string(b)));
    std::normal_distribution<double> normal;
    std::vector<double> z(dim);
    std::vector<double> values(outputs);
    const std::size_t begin = b * cfg.batch_size;
    const std::size_t end = std::min(cfg.n_samples, begin + cfg.batch_size);
    for (std::size_t i = begin; i < end; ++i) {
      for (double& x : z) x = normal(rng);
      per_sample(std::span<const double>(z), values, i);
      for (std::size_t k = 0; k < outputs; ++k) stats[b][k].add(values[k]);
    }
  });
  return stats;
}

void check_finite(double v, std::size_t index) {
  if (!std::isfinite(v))
    throw EvaluationError("non-finite Monte Carlo sample", static_cast<double>(index));
}

}  // namespace

Estimate mc_estimate(const SampleFunction& f, std::size_t dim, const McConfig& cfg) {
  const auto stats =
      run_batches(dim, cfg, 1, [&](std::span<const double> z, std::vector<double>& out,
                                   std::size_t i) {
        out[0] = f(z);
        check_finite(out[0], i);
      });
  Moments total;
  for (const auto& b : stats) total.merge(b[0]);
  return from_moments(total);
}

CoupledEstimate mc_coupled(const SampleFunction& f, const SampleFunction& g, std::size_t dim,
                           const McConfig& cfg) {
  const auto stats =
      run_batches(dim, cfg, 3, [&](std::span<const double> z, std::vector<double>& out,
                                   std::size_t i) {
        out[0] = f(z);
        out[1] = g(z);
        check_finite(out[0], i);
        check_finite(out[1], i);
        out[2] = out[0] - out[1];
      });
  Moments m[3];
  for (const auto& b : stats)
    for (int k = 0; k < 3; ++k) m[k].merge(b[static_cast<std::size_t>(k)]);
  return {from_moments(m[0]), from_moments(m[1]), from_moments(m[2])};
}

void LatticeConfig::validate(std::size_t dim) const {
  if (n_points == 0 || !std::has_single_bit(n_points))
    throw ParameterError("rqmc: n_points must be a power of two");
  if (n_shifts < 2) throw ParameterError("rqmc: n_shifts must be >= 2");
  const auto z = generating_vector.empty() ? default_generating_vector()
                                           : std::span<const std::uint32_t>(generating_vector);
  if (dim > z.size())
    throw ParameterError("rqmc: dimension " + std::to_string(dim) +
                         " exceeds the generating vector length " + std::to_string(z.size()));
  if (generating_vector.empty()) {
    if (n_points > default_lattice_max_points())
      throw ParameterError("rqmc: n_points exceeds the embedded lattice size " +
                           std::to_string(default_lattice_max_points()));
  } else {
    for (auto v : generating_vector)
      if (v % 2 == 0 || v >= std::max<std::size_t>(n_points, 2))
        throw ParameterError("rqmc: generating vector entries must be odd and < n_points");
  }
}

Estimate rqmc_estimate(const SampleFunction& f, std::size_t dim, const LatticeConfig& cfg) {
  if (dim == 0) throw ParameterError("rqmc: dim must be >= 1");
  cfg.validate(dim);
  const auto zvec = cfg.generating_vector.empty()
                        ? default_generating_vector()
                        : std::span<const std::uint32_t>(cfg.generating_vector);
  const std::uint64_t n = cfg.n_points;
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> shift_means(cfg.n_shifts);
  parallel_for(cfg.n_shifts, cfg.threads, [&](std::size_t s) {
    std::mt19937_64 rng(derive_seed(cfg.seed, "rqmc-shift-" + std::to_string(s)));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<double> shift(dim);
    for (double& d : shift) d = uniform(rng);
    std::vector<double> x(dim);
    double sum = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        const std::uint64_t k = (i * zvec[j]) & (n - 1);
        double u = static_cast<double>(k) * inv_n + shift[j];
        if (u >= 1.0) u -= 1.0;
        if (u <= 0.0) u = 0x1p-60;
        x[j] = inverse_normal_cdf(u);
      }
      const double v = f(x);
      check_finite(v, static_cast<std::size_t>(i));
      sum += v;
    }
    shift_means[s] = sum * inv_n;
  });

  Moments m;
  for (double v : shift_means) m.add(v);
  Estimate e;
  e.value = m.mean;
  e.stat_error = 1.96 * std::sqrt(m.variance() / m.n);
  e.work = static_cast<std::size_t>(n * cfg.n_shifts);
  return e;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double inverse_normal_cdf(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("inverse_normal_cdf: u must lie in (0, 1)");
  // Acklam's rational approximation followed by one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (u < p_low) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - p_low) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement; use the complementary tail for u > 1/2.
  const double e = u > 0.5 ? -(0.5 * std::erfc(x / std::numbers::sqrt2) - (1.0 - u))
                           : 0.5 * std::erfc(-x / std::numbers::sqrt2) - u;
  const double w = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= w / (1.0 + 0.5 * x * w);
  return x;
}

}  // namespace smoothquad
