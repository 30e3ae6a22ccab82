// Offline component-by-component search for an embedded rank-1 lattice
// generating vector. Prints a C++ table suitable for src/lattice_table.cpp.
//
// Criterion: shift-averaged worst-case error in the Korobov space of
// smoothness 2 (kernel 2*pi^2*B2(x)) with product weights gamma_j = 1/j^2.
// Each new component minimises max_m e_m^2(z) / min_z' e_m^2(z') over
// the embedded point counts 2^m_min .. 2^m_max.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <vector>

int main(int argc, char** argv) {
  const int m_max = argc > 1 ? std::atoi(argv[1]) : 14;
  const int dims = argc > 2 ? std::atoi(argv[2]) : 128;
  const int m_min = 4;
  const std::uint32_t n = 1u << m_max;
  const std::uint32_t mask = n - 1;

  std::vector<double> omega(n);
  for (std::uint32_t k = 0; k < n; ++k) {
    const double x = static_cast<double>(k) / n;
    omega[k] = 2.0 * std::numbers::pi * std::numbers::pi * (x * x - x + 1.0 / 6.0);
  }

  // valuation bucket v(k): point k belongs to the 2^m embedded set iff
  // 2^(m_max - m) divides k.
  std::vector<int> level_of(n);
  level_of[0] = 0;
  for (std::uint32_t k = 1; k < n; ++k) {
    int v = 0;
    while (((k >> v) & 1u) == 0) ++v;
    level_of[k] = m_max - v;  // smallest m containing k
  }

  std::vector<double> prod(n, 1.0);
  std::vector<std::uint32_t> z(dims);
  const int n_levels = m_max + 1;
  const std::uint32_t n_cand = n / 2;
  std::vector<double> errs(static_cast<std::size_t>(n_cand) * n_levels);
  std::vector<double> bucket(n_levels);

  for (int j = 0; j < dims; ++j) {
    const double gamma = 1.0 / ((j + 1.0) * (j + 1.0));
    for (std::uint32_t c = 0; c < n_cand; ++c) {
      const std::uint32_t cand = 2 * c + 1;
      std::fill(bucket.begin(), bucket.end(), 0.0);
      std::uint32_t idx = 0;
      for (std::uint32_t k = 0; k < n; ++k) {
        bucket[level_of[k]] += prod[k] * (1.0 + gamma * omega[idx]);
        idx = (idx + cand) & mask;
      }
      double acc = 0.0;
      for (int m = 0; m <= m_max; ++m) {
        acc += bucket[m];
        errs[static_cast<std::size_t>(c) * n_levels + m] = acc / std::ldexp(1.0, m) - 1.0;
      }
    }
    std::vector<double> best(n_levels, std::numeric_limits<double>::infinity());
    for (std::uint32_t c = 0; c < n_cand; ++c)
      for (int m = m_min; m <= m_max; ++m)
        best[m] = std::min(best[m], errs[static_cast<std::size_t>(c) * n_levels + m]);
    double best_score = std::numeric_limits<double>::infinity();
    std::uint32_t best_z = 1;
    for (std::uint32_t c = 0; c < n_cand; ++c) {
      double score = 0.0;
      for (int m = m_min; m <= m_max; ++m)
        score = std::max(score, errs[static_cast<std::size_t>(c) * n_levels + m] / best[m]);
      if (score < best_score * (1.0 - 1e-12)) {
        best_score = score;
        best_z = 2 * c + 1;
      }
    }
    z[j] = best_z;
    std::uint32_t idx = 0;
    for (std::uint32_t k = 0; k < n; ++k) {
      prod[k] *= 1.0 + gamma * omega[idx];
      idx = (idx + best_z) & mask;
    }
    std::fprintf(stderr, "dim %d: z=%u score=%.4f e_max^2=%.3e\n", j + 1, best_z, best_score,
                 errs[static_cast<std::size_t>(best_z / 2) * n_levels + m_max]);
  }

  std::printf("// generated by tools/lattice_cbc %d %d\n", m_max, dims);
  for (int j = 0; j < dims; ++j) std::printf("%u,%s", z[j], (j % 8 == 7) ? "\n" : " ");
  std::printf("\n");
  return 0;
}
