#pragma once

#include <algorithm>
#include <complex>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "spotvol/spotvol.hpp"

namespace spotvol::test {

using Rng = std::mt19937_64;

inline std::complex<double> expi(double turns) { return std::polar(1.0, 2.0 * std::numbers::pi * turns); }

// Independent of the library: plain trigonometric sums.
inline double direct_dirichlet(int M, double x) {
  std::complex<double> s = 0.0;
  for (int k = -M; k <= M; ++k) s += expi(k * x);
  return s.real();
}

inline double direct_fejer(int L, double x) {
  std::complex<double> s = 0.0;
  for (int k = -(L - 1); k <= L - 1; ++k) s += (1.0 - std::abs(k) / static_cast<double>(L)) * expi(k * x);
  return s.real();
}

// Strictly increasing times in (0,1] and normal increments, per asset.
inline AssetIncrements random_asset(Rng& rng, std::size_t n) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 0.1);
  std::set<double> ts;
  while (ts.size() < n) ts.insert(unif(rng));
  AssetIncrements a;
  a.times.assign(ts.begin(), ts.end());
  for (std::size_t l = 0; l < n; ++l) a.deltas.push_back(normal(rng));
  return a;
}

inline IncrementTable random_increments(Rng& rng, std::size_t d, std::size_t max_n) {
  std::uniform_int_distribution<std::size_t> count(1, max_n);
  IncrementTable inc;
  for (std::size_t j = 0; j < d; ++j) inc.push_back(random_asset(rng, count(rng)));
  return inc;
}

inline KernelParams family_params(KernelFamily f, int M) {
  KernelParams p;
  p.family = f;
  p.gamma = 1.0 / std::sqrt(2.0 * M + 1.0);
  p.l_gauss = 2.0 * M + 1.0;
  return p;
}

inline const std::vector<KernelFamily>& all_families() {
  static const std::vector<KernelFamily> f{KernelFamily::flat, KernelFamily::cauchy, KernelFamily::gaussian,
                                           KernelFamily::fejer};
  return f;
}

inline double rel_frobenius(const Matrix& a, const Matrix& b) {
  const double scale = std::max(a.frobenius(), b.frobenius());
  return scale == 0.0 ? 0.0 : (a - b).frobenius() / scale;
}

// Classical estimator in its k-sum form, expanded literally:
//   sum_{|k|<=L} (1 - |k|/(L+1)) e^{2 pi i k t} (1/(2M+1))
//     sum_{|s|<=M} sum_{l,l'} e^{-2 pi i s t^j_l} e^{-2 pi i (k-s) t^{j'}_{l'}} dX dX
inline Matrix classical_ksum(const IncrementTable& inc, int M, int L, double t) {
  const std::size_t d = inc.size();
  Matrix out(d, d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t jp = 0; jp < d; ++jp) {
      std::complex<double> total = 0.0;
      for (int k = -L; k <= L; ++k) {
        std::complex<double> inner = 0.0;
        for (int s = -M; s <= M; ++s)
          for (std::size_t l = 0; l < inc[j].size(); ++l)
            for (std::size_t lp = 0; lp < inc[jp].size(); ++lp)
              inner += expi(-s * inc[j].times[l]) * expi(-(k - s) * inc[jp].times[lp]) * inc[j].deltas[l] *
                       inc[jp].deltas[lp];
        total += (1.0 - std::abs(k) / (L + 1.0)) * expi(k * t) * inner / (2.0 * M + 1.0);
      }
      out(j, jp) = total.real();
    }
  return out;
}

// N = 2M+1 synchronous equispaced ticks t_l = l/N with random increments.
inline IncrementTable uniform_grid_increments(Rng& rng, std::size_t d, int M) {
  const int N = 2 * M + 1;
  std::normal_distribution<double> normal(0.0, 1.0);
  IncrementTable inc(d);
  for (auto& a : inc)
    for (int l = 1; l <= N; ++l) {
      a.times.push_back(static_cast<double>(l) / N);
      a.deltas.push_back(normal(rng));
    }
  return inc;
}

// c(k) = (1 - min(|k|, N - |k|)/M) / N on k = -2M..2M.
inline PSDFunction reduction_weights(int M) {
  const int N = 2 * M + 1;
  return PSDFunction::from(M, [&](int k) {
    const int a = std::abs(k);
    return (1.0 - std::min(a, N - a) / static_cast<double>(M)) / N;
  });
}

inline double min_eigenvalue(const Matrix& m) { return symm_eigenvalues(m).back(); }

// The fixed two-asset asynchronous instance where the classical estimator
// is visibly asymmetric.
inline IncrementTable asymmetry_witness() {
  return {AssetIncrements{{0.1, 0.35, 0.6, 0.9}, {0.3, -0.2, 0.25, -0.1}},
          AssetIncrements{{0.2, 0.5, 0.75, 1.0}, {-0.15, 0.4, 0.1, 0.2}}};
}

}  // namespace spotvol::test
