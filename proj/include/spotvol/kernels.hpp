#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spotvol/eigen.hpp"
#include "spotvol/error.hpp"
#include "spotvol/matrix.hpp"

namespace spotvol {

using cplx = std::complex<double>;

namespace detail {

// Distance below which sin(pi x) is treated as zero and the kernel's limit
// value is returned.
inline constexpr double kIntegerGuard = 1e-9;

inline double reduce_periodic(double x) { return x - std::round(x); }

inline cplx unit_phase(double turns) {
  const double a = 2.0 * std::numbers::pi * turns;
  return {std::cos(a), std::sin(a)};
}

}  // namespace detail

// Dirichlet kernel D_M(x) = sum_{|s|<=M} e^{2 pi i s x}.
inline double dirichlet_eval(int M, double x) {
  const double r = detail::reduce_periodic(x);
  if (std::abs(r) < detail::kIntegerGuard) return 2.0 * M + 1.0;
  const double pi = std::numbers::pi;
  return std::sin((2.0 * M + 1.0) * pi * r) / std::sin(pi * r);
}

// Fejer kernel K_L(x) = sum_{|k|<L} (1 - |k|/L) e^{2 pi i k x}; never negative.
inline double fejer_eval(int L, double x) {
  const double r = detail::reduce_periodic(x);
  if (std::abs(r) < detail::kIntegerGuard) return static_cast<double>(L);
  const double pi = std::numbers::pi;
  const double q = std::sin(L * pi * r) / std::sin(pi * r);
  return q * q / L;
}

// Table of c(k), k = -2M..2M.
class PSDFunction {
 public:
  PSDFunction() = default;
  PSDFunction(int M, std::vector<cplx> values) : M_(M), values_(std::move(values)) {
    if (M < 1) throw Error("PSDFunction: M must be >= 1");
    if (values_.size() != static_cast<std::size_t>(4 * M + 1))
      throw Error("PSDFunction: table must cover k = -2M..2M");
  }

  // From a function of k evaluated on -2M..2M.
  template <class F>
  static PSDFunction from(int M, F&& f) {
    std::vector<cplx> v;
    v.reserve(4 * M + 1);
    for (int k = -2 * M; k <= 2 * M; ++k) v.push_back(cplx(f(k)));
    return PSDFunction(M, std::move(v));
  }

  int M() const noexcept { return M_; }
  int max_lag() const noexcept { return 2 * M_; }
  cplx operator()(int k) const { return values_.at(static_cast<std::size_t>(k + 2 * M_)); }
  const std::vector<cplx>& values() const noexcept { return values_; }

  double hermitian_defect() const {
    double m = 0.0;
    for (int k = 0; k <= 2 * M_; ++k) m = std::max(m, std::abs((*this)(-k) - std::conj((*this)(k))));
    return m;
  }

 private:
  int M_ = 0;
  std::vector<cplx> values_;
};

enum class KernelFamily { flat, cauchy, gaussian, fejer };

inline std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::flat: return "flat";
    case KernelFamily::cauchy: return "cauchy";
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::fejer: return "fejer";
  }
  return "?";
}

inline KernelFamily parse_kernel_family(const std::string& s) {
  if (s == "flat") return KernelFamily::flat;
  if (s == "cauchy") return KernelFamily::cauchy;
  if (s == "gaussian") return KernelFamily::gaussian;
  if (s == "fejer") return KernelFamily::fejer;
  throw Error("unknown kernel family '" + s + "' (expected flat|cauchy|gaussian|fejer)");
}

struct KernelParams {
  KernelFamily family = KernelFamily::gaussian;
  double gamma = 0.0;    // Cauchy scale
  double l_gauss = 0.0;  // Gaussian rate
  int nodes = 0;         // quadrature nodes; 0 means 2M+1
  bool wrap = false;     // periodize continuous densities before sampling

  void validate() const {
    if (family == KernelFamily::cauchy && !(gamma > 0.0)) throw Error("cauchy kernel needs gamma > 0");
    if (family == KernelFamily::gaussian && !(l_gauss > 0.0))
      throw Error("gaussian kernel needs l_gauss > 0");
    if (nodes < 0) throw Error("nodes must be >= 1");
  }
};

enum class MeasureKind { flat, cauchy, gaussian, fejer, custom };

// Discrete nonnegative measure on the circle, atoms in [-1/2, 1/2).
struct SpectralMeasure {
  std::vector<double> atoms;
  std::vector<double> weights;
  MeasureKind kind = MeasureKind::custom;
  double parameter = 0.0;  // gamma or L for the continuous families

  std::size_t size() const noexcept { return atoms.size(); }

  double total_mass() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }

  void validate() const {
    if (atoms.size() != weights.size()) throw Error("measure: atoms and weights differ in length");
    if (atoms.empty()) throw Error("measure: no atoms");
    for (std::size_t q = 0; q < atoms.size(); ++q) {
      if (!(atoms[q] >= -0.5 && atoms[q] < 0.5)) throw Error("measure: atom outside [-1/2, 1/2)");
      if (!(weights[q] >= 0.0) || !std::isfinite(weights[q]))
        throw Error("measure: weights must be finite and nonnegative");
    }
    if (!(total_mass() > 0.0)) throw Error("measure: total mass must be positive");
    std::set<double> seen(atoms.begin(), atoms.end());
    if (seen.size() != atoms.size()) throw Error("measure: atoms must be distinct");
  }
};

inline SpectralMeasure custom_measure(std::vector<double> atoms, std::vector<double> weights) {
  SpectralMeasure mu{std::move(atoms), std::move(weights), MeasureKind::custom, 0.0};
  mu.validate();
  return mu;
}

namespace detail {

// Truncated-to-[-1/2,1/2) Riemann discretization of a density on Q nodes
// y_q = -1/2 + q/Q, optionally 1-periodized over |n| <= 5.
template <class Density>
void fill_riemann(SpectralMeasure& mu, int nodes, double scale, bool wrap, Density&& density) {
  mu.atoms.resize(nodes);
  mu.weights.resize(nodes);
  for (int q = 0; q < nodes; ++q) {
    const double y = -0.5 + static_cast<double>(q) / nodes;
    double rho = 0.0;
    if (wrap) {
      for (int n = -5; n <= 5; ++n) rho += density(y + n);
    } else {
      rho = density(y);
    }
    mu.atoms[q] = y;
    mu.weights[q] = scale * rho / nodes;
  }
}

}  // namespace detail

// Quadrature-ready spectral measure for the chosen family, each scaled by
// 1/(2M+1).
inline SpectralMeasure make_measure(const KernelParams& params, int M) {
  params.validate();
  if (M < 1) throw Error("make_measure: M must be >= 1");
  const double pi = std::numbers::pi;
  const double scale = 1.0 / (2.0 * M + 1.0);
  const int nodes = params.nodes > 0 ? params.nodes : 2 * M + 1;

  SpectralMeasure mu;
  switch (params.family) {
    case KernelFamily::flat:
      mu.kind = MeasureKind::flat;
      mu.atoms = {0.0};
      mu.weights = {scale};
      break;
    case KernelFamily::cauchy: {
      const double g = params.gamma;
      mu.kind = MeasureKind::cauchy;
      mu.parameter = g;
      detail::fill_riemann(mu, nodes, scale, params.wrap,
                           [g, pi](double y) { return g / (pi * (y * y + g * g)); });
      break;
    }
    case KernelFamily::gaussian: {
      const double L = params.l_gauss;
      mu.kind = MeasureKind::gaussian;
      mu.parameter = L;
      // Density as written, sqrt(L/(2 pi)) e^{-L y^2}; its mass is 1/sqrt(2).
      const double norm = std::sqrt(L / (2.0 * pi));
      detail::fill_riemann(mu, nodes, scale, params.wrap,
                           [L, norm](double y) { return norm * std::exp(-L * y * y); });
      break;
    }
    case KernelFamily::fejer: {
      // K_{2M+1}(y) dy / (2M+1) sampled on 4M+1 equispaced nodes. The
      // integrands e^{2 pi i k y} K(y) have degree <= 4M, so this is exact.
      const int P = 4 * M + 1;
      mu.kind = MeasureKind::fejer;
      mu.atoms.resize(P);
      mu.weights.resize(P);
      for (int p = 0; p < P; ++p) {
        const int shifted = p <= 2 * M ? p : p - P;  // maps p/P into [-1/2, 1/2)
        const double y = static_cast<double>(shifted) / P;
        mu.atoms[p] = y;
        mu.weights[p] = fejer_eval(2 * M + 1, y) * scale / P;
      }
      break;
    }
  }
  mu.validate();
  return mu;
}

// c(k) = sum_q w_q e^{2 pi i y_q k}, k = -2M..2M.
inline PSDFunction c_from_measure(const SpectralMeasure& mu, int M) {
  mu.validate();
  if (M < 1) throw Error("c_from_measure: M must be >= 1");
  std::vector<cplx> values(4 * M + 1);
  for (int k = 0; k <= 2 * M; ++k) {
    cplx acc = 0.0;
    for (std::size_t q = 0; q < mu.size(); ++q) acc += mu.weights[q] * detail::unit_phase(mu.atoms[q] * k);
    values[2 * M + k] = acc;
    values[2 * M - k] = std::conj(acc);
  }
  values[2 * M] = values[2 * M].real();
  return PSDFunction(M, std::move(values));
}

struct PsdCheck {
  bool ok = false;
  double min_eigenvalue = 0.0;
  double violation = 0.0;  // max(0, -min_eigenvalue) when not ok
};

// Hermitian Toeplitz matrix [c(u-u')] for u,u' in -M..M, embedded as the
// real symmetric [[Re, -Im], [Im, Re]] whose spectrum doubles each
// eigenvalue.
inline Matrix toeplitz_real_embedding(const PSDFunction& c) {
  const int n = 2 * c.M() + 1;
  Matrix t(2 * n, 2 * n);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      const cplx z = c(u - v);
      t(u, v) = z.real();
      t(u + n, v + n) = z.real();
      t(u, v + n) = -z.imag();
      t(u + n, v) = z.imag();
    }
  return t;
}

inline PsdCheck verify_psd_function(const PSDFunction& c, double rel_tol = 1e-10) {
  const Matrix t = toeplitz_real_embedding(c);
  const auto eig = symm_eigenvalues(t);
  PsdCheck out;
  out.min_eigenvalue = eig.back();
  const double c0 = c(0).real();
  out.ok = out.min_eigenvalue >= -rel_tol * std::max(c0, 0.0);
  out.violation = out.ok ? 0.0 : -out.min_eigenvalue;
  return out;
}

}  // namespace spotvol
