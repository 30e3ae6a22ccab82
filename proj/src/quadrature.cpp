#include "smoothquad/quadrature.hpp"

#include "smoothquad/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <mutex>
#include <numbers>

namespace smoothquad {

std::string to_string(RuleFamily f) {
  switch (f) {
    case RuleFamily::Hermite: return "hermite";
    case RuleFamily::Laguerre: return "laguerre";
    case RuleFamily::Legendre: return "legendre";
  }
  return "unknown";
}

Rule1D Rule1D::mapped(double a, double b) const {
  if (family != RuleFamily::Legendre) throw ParameterError("Rule1D::mapped: Legendre rules only");
  Rule1D out{family, nodes, weights};
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < size(); ++i) {
    out.nodes[i] = mid + half * nodes[i];
    out.weights[i] = half * weights[i];
  }
  return out;
}

Rule1D gauss_rule(RuleFamily family, std::size_t m) {
  if (m < 1 || m > 256) throw ParameterError("gauss_rule: m must lie in [1, 256]");
  const auto n = static_cast<Eigen::Index>(m);
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(std::max<Eigen::Index>(n - 1, 0));
  double mass = 1.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double kk = static_cast<double>(k);
    switch (family) {
      case RuleFamily::Hermite:
        diag[k] = 0.0;
        if (k + 1 < n) sub[k] = std::sqrt(kk + 1.0);
        break;
      case RuleFamily::Laguerre:
        diag[k] = 2.0 * kk + 1.0;
        if (k + 1 < n) sub[k] = kk + 1.0;
        break;
      case RuleFamily::Legendre:
        diag[k] = 0.0;
        if (k + 1 < n) sub[k] = (kk + 1.0) / std::sqrt(4.0 * (kk + 1.0) * (kk + 1.0) - 1.0);
        break;
    }
  }
  if (family == RuleFamily::Legendre) mass = 2.0;

  Rule1D rule{family, std::vector<double>(m), std::vector<double>(m)};
  if (m == 1) {
    rule.nodes[0] = diag[0];
    rule.weights[0] = mass;
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  for (Eigen::Index i = 0; i < n; ++i) {
    // Christoffel numbers from the orthonormal recurrence: unlike squared
    // eigenvector components they keep relative accuracy for tiny weights.
    const double x = eig.eigenvalues()[i];
    double prev = 0.0, cur = 1.0, sum = 1.0, log_scale = 0.0;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      const double next = ((x - diag[k]) * cur - (k > 0 ? sub[k - 1] : 0.0) * prev) / sub[k];
      prev = cur;
      cur = next;
      sum += cur * cur;
      if (sum > 1e200) {
        prev *= 1e-100;
        cur *= 1e-100;
        sum *= 1e-200;
        log_scale += 200.0 * std::log(10.0);
      }
    }
    rule.nodes[static_cast<std::size_t>(i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = mass * std::exp(-std::log(sum) - log_scale);
  }
  if (family != RuleFamily::Laguerre) {
    // Enforce exact symmetry about 0.
    for (std::size_t i = 0; i < m / 2; ++i) {
      const std::size_t j = m - 1 - i;
      const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
      const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
      rule.nodes[i] = -x;
      rule.nodes[j] = x;
      rule.weights[i] = rule.weights[j] = w;
    }
    if (m % 2 == 1) rule.nodes[m / 2] = 0.0;
  }
  // Renormalise the mass lost to rounding.
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w *= mass / total;
  return rule;
}

const Rule1D& cached_rule(RuleFamily family, std::size_t m) {
  static std::mutex mu;
  static std::map<std::pair<RuleFamily, std::size_t>, std::unique_ptr<Rule1D>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{family, m}];
  if (!slot) slot = std::make_unique<Rule1D>(gauss_rule(family, m));
  return *slot;
}

std::size_t level_points(int level) {
  if (level < 1) throw ParameterError("level_points: level must be >= 1");
  if (level == 1) return 1;
  if (level > kMaxLevel) throw ParameterError("level_points: level above 8 is not supported");
  return (std::size_t{1} << (level - 1)) + 1;
}

// ---------------------------------------------------------------- cache

std::size_t EvaluationCache::Hash::operator()(const std::vector<double>& v) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (double x : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    h ^= bits + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

double EvaluationCache::operator()(std::span<const double> x) {
  ++lookups_;
  std::vector<double> key(x.begin(), x.end());
  for (double& v : key)
    if (v == 0.0) v = 0.0;  // fold -0.0
  if (auto it = values_.find(key); it != values_.end()) return it->second;
  const double value = f_(x);
  if (!std::isfinite(value)) throw EvaluationError("integrand returned a non-finite value", value);
  ++evaluations_;
  values_.emplace(std::move(key), value);
  return value;
}

bool EvaluationCache::contains(std::span<const double> x) const {
  std::vector<double> key(x.begin(), x.end());
  for (double& v : key)
    if (v == 0.0) v = 0.0;
  return values_.contains(key);
}

namespace {

// Calls visit(point, weight) for every node of the tensor grid of beta.
template <class Visit>
void for_each_tensor_point(const MultiIndex& beta,
                           const std::function<std::size_t(int)>& level_map, Visit&& visit) {
  const std::size_t dim = beta.size();
  std::vector<std::size_t> active;
  std::vector<const Rule1D*> rules;
  for (std::size_t i = 0; i < dim; ++i) {
    if (beta[i] < 1) throw ParameterError("multi-index entries must be >= 1");
    const std::size_t m = level_map(beta[i]);
    if (m > 1) {
      active.push_back(i);
      rules.push_back(&cached_rule(RuleFamily::Hermite, m));
    }
  }
  std::vector<double> x(dim, 0.0);
  std::vector<std::size_t> pos(active.size(), 0);
  while (true) {
    double w = 1.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      x[active[a]] = rules[a]->nodes[pos[a]];
      w *= rules[a]->weights[pos[a]];
    }
    visit(std::span<const double>(x), w);
    std::size_t a = 0;
    for (; a < active.size(); ++a) {
      if (++pos[a] < rules[a]->size()) break;
      pos[a] = 0;
    }
    if (a == active.size()) break;
  }
}

}  // namespace

double tensor_quadrature(const GaussianIntegrand& f, const MultiIndex& beta,
                         const std::function<std::size_t(int)>& level_map) {
  double sum = 0.0;
  for_each_tensor_point(beta, level_map,
                        [&](std::span<const double> x, double w) { sum += w * f(x); });
  return sum;
}

// ---------------------------------------------------------------- sparse grid

SparseGridState::SparseGridState(GaussianIntegrand f, std::size_t dim,
                                 std::function<std::size_t(int)> level_map)
    : dim_(dim), level_map_(std::move(level_map)), cache_(std::move(f)) {
  if (dim == 0) throw ParameterError("sparse grid: dim must be >= 1");
}

double SparseGridState::tensor(const MultiIndex& beta) {
  if (beta.size() != dim_) throw InputShapeError("sparse grid: multi-index length != dim");
  if (auto it = tensors_.find(beta); it != tensors_.end()) return it->second;
  double sum = 0.0;
  for_each_tensor_point(beta, level_map_,
                        [&](std::span<const double> x, double w) { sum += w * cache_(x); });
  tensors_.emplace(beta, sum);
  return sum;
}

double SparseGridState::delta(const MultiIndex& beta) {
  std::vector<std::size_t> raised;
  for (std::size_t i = 0; i < beta.size(); ++i)
    if (beta[i] > 1) raised.push_back(i);
  double sum = 0.0;
  MultiIndex corner = beta;
  const std::size_t subsets = std::size_t{1} << raised.size();
  for (std::size_t s = 0; s < subsets; ++s) {
    int parity = 0;
    for (std::size_t b = 0; b < raised.size(); ++b) {
      const bool down = (s >> b) & 1u;
      corner[raised[b]] = beta[raised[b]] - (down ? 1 : 0);
      parity += down;
    }
    sum += (parity % 2 == 0 ? 1.0 : -1.0) * tensor(corner);
  }
  return sum;
}

std::size_t SparseGridState::new_points(const MultiIndex& beta) const {
  std::size_t fresh = 0;
  for_each_tensor_point(beta, level_map_, [&](std::span<const double> x, double) {
    if (!cache_.contains(x)) ++fresh;
  });
  return fresh;
}

double delta_q(const GaussianIntegrand& f, const MultiIndex& beta) {
  SparseGridState state(f, beta.size());
  return state.delta(beta);
}

double AdaptiveState::error_indicator() const {
  double s = 0.0;
  for (const auto& [beta, dq] : front) s += std::abs(dq);
  return s;
}

bool AdaptiveState::admissible() const {
  for (const auto* set : {&accepted, &front}) {
    for (const auto& [beta, dq] : *set) {
      for (std::size_t i = 0; i < beta.size(); ++i) {
        if (beta[i] <= 1) continue;
        MultiIndex back = beta;
        --back[i];
        if (!accepted.contains(back)) return false;
      }
    }
  }
  return true;
}

AsgqResult asgq(const GaussianIntegrand& f, std::size_t dim, const AsgqConfig& cfg) {
  if (dim == 0) throw ParameterError("asgq: dim must be >= 1");
  if (cfg.max_evaluations == 0) throw ParameterError("asgq: evaluation budget must be >= 1");
  SparseGridState grid(f, dim);
  AsgqResult result;
  auto& st = result.state;
  std::map<MultiIndex, std::size_t> work;  // new points when the index was added

  double estimate = 0.0;
  const MultiIndex root(dim, 1);
  {
    const double dq = grid.delta(root);
    st.front.emplace(root, dq);
    work.emplace(root, 1);
    estimate += dq;
  }
  st.evaluations = grid.evaluations();
  st.trace.push_back({st.evaluations, estimate, 0});

  auto profit = [&](const MultiIndex& b, double dq) {
    return cfg.work_normalized_profit ? std::abs(dq) / static_cast<double>(std::max<std::size_t>(work[b], 1))
                                      : std::abs(dq);
  };

  while (!st.front.empty()) {
    if (st.error_indicator() < cfg.tol) {
      st.converged = true;
      break;
    }
    // Largest profit; ties resolve to the smallest index (map order).
    auto best = st.front.begin();
    double best_profit = profit(best->first, best->second);
    for (auto it = std::next(st.front.begin()); it != st.front.end(); ++it) {
      const double p = profit(it->first, it->second);
      if (p > best_profit) {
        best = it;
        best_profit = p;
      }
    }
    const MultiIndex chosen = best->first;

    // Budget check for the admissible forward neighbours before committing.
    std::vector<MultiIndex> candidates;
    std::size_t needed = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      MultiIndex nb = chosen;
      ++nb[i];
      if (nb[i] > kMaxLevel) continue;
      bool ok = true;
      for (std::size_t k = 0; k < dim && ok; ++k) {
        if (k == i || nb[k] <= 1) continue;
        MultiIndex back = nb;
        --back[k];
        ok = st.accepted.contains(back);
      }
      if (!ok || st.front.contains(nb)) continue;
      needed += grid.new_points(nb);
      candidates.push_back(std::move(nb));
    }
    if (grid.evaluations() + needed > cfg.max_evaluations) {
      st.budget_exhausted = true;
      break;
    }
    st.accepted.emplace(chosen, best->second);
    st.front.erase(best);
    for (auto& nb : candidates) {
      const std::size_t before = grid.evaluations();
      const double dq = grid.delta(nb);
      work[nb] = grid.evaluations() - before;
      estimate += dq;
      st.front.emplace(std::move(nb), dq);
    }
    st.evaluations = grid.evaluations();
    st.trace.push_back({st.evaluations, estimate, st.accepted.size()});
  }
  if (st.front.empty()) st.converged = true;
  st.evaluations = grid.evaluations();

  // Sum in a fixed order for reproducibility.
  double total = 0.0;
  for (const auto& [b, dq] : st.accepted) total += dq;
  for (const auto& [b, dq] : st.front) total += dq;
  result.estimate = total;
  return result;
}

std::vector<double> first_difference_profile(const GaussianIntegrand& f, std::size_t dim,
                                             std::size_t direction, int k_max) {
  if (direction >= dim) throw ParameterError("first_difference_profile: direction out of range");
  SparseGridState grid(f, dim);
  std::vector<double> out;
  MultiIndex beta(dim, 1);
  for (int k = 0; k <= k_max; ++k) {
    beta[direction] = 1 + k;
    out.push_back(std::abs(grid.delta(beta)));
  }
  return out;
}

}  // namespace smoothquad
