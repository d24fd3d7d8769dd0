#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "spotvol/error.hpp"
#include "spotvol/kernels.hpp"
#include "spotvol/market_data.hpp"
#include "spotvol/matrix.hpp"

namespace spotvol {

enum class Method { generic, classical, psd_direct, psd_factorized };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::generic: return "generic";
    case Method::classical: return "classical";
    case Method::psd_direct: return "psd_direct";
    case Method::psd_factorized: return "psd_factorized";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "generic") return Method::generic;
  if (s == "classical") return Method::classical;
  if (s == "psd_direct" || s == "psd-direct") return Method::psd_direct;
  if (s == "psd_factorized" || s == "psd-factorized") return Method::psd_factorized;
  throw Error("unknown method '" + s + "' (expected generic|classical|psd_direct|psd_factorized)");
}

struct VolMatrix {
  double t = 0.0;
  Matrix entries;
  // Largest |Im| dropped when taking the real part (generic form only).
  double imag_residue = 0.0;
  bool imag_warning = false;
};

struct EstimatorConfig {
  Method method = Method::psd_factorized;
  int M = 15;
  int L = -1;  // classical Fejer order; negative means L = M
  KernelParams kernel{};
  std::vector<double> eval_grid;
  unsigned threads = 1;

  int fejer_order() const { return L < 0 ? M : L; }

  void validate() const {
    if (M < 1) throw Error("M must be >= 1");
    if (method == Method::classical && L < -1) throw Error("L must be >= 0");
    if (eval_grid.empty()) throw Error("evaluation grid is empty");
    for (double t : eval_grid)
      if (!(t >= 0.0 && t <= 1.0)) throw Error("evaluation time outside [0,1]");
    for (std::size_t i = 1; i < eval_grid.size(); ++i)
      if (!(eval_grid[i] > eval_grid[i - 1])) throw Error("evaluation grid must be strictly increasing");
    if (method != Method::classical) kernel.validate();
  }
};

struct VolPath {
  std::vector<VolMatrix> points;
  EstimatorConfig config;

  std::size_t size() const noexcept { return points.size(); }
  std::size_t d() const noexcept { return points.empty() ? 0 : points.front().entries.rows(); }
};

// `count` equispaced times covering [0,1] including both ends; a single
// point sits at 1/2.
inline std::vector<double> uniform_grid(std::size_t count) {
  if (count == 0) throw Error("grid size must be >= 1");
  if (count == 1) return {0.5};
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) g[i] = static_cast<double>(i) / static_cast<double>(count - 1);
  return g;
}

namespace detail {

inline void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    std::ostringstream msg;
    msg << "evaluation time " << t << " outside [0,1]";
    throw Error(msg.str());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Per-asset windowed Fourier sums a_j(s) = sum_l e^{-2 pi i s t_l} dX_l.
// Everything fast below is built on these.

class FourierCoefficients {
 public:
  FourierCoefficients() = default;
  FourierCoefficients(int M, std::size_t d) : M_(M), d_(d), table_(d * (2 * M + 1)) {}

  int M() const noexcept { return M_; }
  std::size_t d() const noexcept { return d_; }

  cplx operator()(std::size_t j, int s) const { return table_[index(j, s)]; }
  cplx& operator()(std::size_t j, int s) { return table_[index(j, s)]; }

 private:
  std::size_t index(std::size_t j, int s) const {
    return j * static_cast<std::size_t>(2 * M_ + 1) + static_cast<std::size_t>(s + M_);
  }

  int M_ = 0;
  std::size_t d_ = 0;
  std::vector<cplx> table_;
};

inline FourierCoefficients fourier_coefficients(const IncrementTable& inc, int M) {
  if (M < 1) throw Error("fourier_coefficients: M must be >= 1");
  FourierCoefficients a(M, inc.size());
  for (std::size_t j = 0; j < inc.size(); ++j) {
    const auto& asset = inc[j];
    for (int s = 0; s <= M; ++s) {
      cplx acc = 0.0;
      for (std::size_t l = 0; l < asset.size(); ++l)
        acc += asset.deltas[l] * detail::unit_phase(-s * asset.times[l]);
      a(j, s) = acc;
      a(j, -s) = std::conj(acc);
    }
    a(j, 0) = a(j, 0).real();
  }
  return a;
}

// ---------------------------------------------------------------------------
// Generic form: index set K, fiber S(k), weights c(k).

struct Fiber {
  std::vector<int> K;
  std::vector<std::vector<std::pair<int, int>>> S;  // S[i] is the fiber over K[i]
};

struct GenericSpec {
  Fiber fiber;
  std::vector<cplx> c;  // c[i] is the weight of K[i]

  void validate() const {
    if (fiber.K.size() != fiber.S.size() || fiber.K.size() != c.size())
      throw Error("generic spec: K, S and c differ in length");
    for (std::size_t i = 0; i < fiber.K.size(); ++i)
      for (const auto& [s, sp] : fiber.S[i])
        if (s + sp != fiber.K[i]) throw Error("generic spec: fiber pair does not sum to k");
  }
};

// The fiber making the generic estimator PSD: K = {-2M..2M} and S(k) all
// pairs (s, s') with s + s' = k and |s|, |s'| <= M, enumerated in the order
// v = 0, 1, ... of the closed-form parameterization.
inline Fiber build_fiber(int M) {
  if (M < 1) throw Error("build_fiber: M must be >= 1");
  Fiber f;
  for (int k = -2 * M; k <= 2 * M; ++k) {
    std::vector<std::pair<int, int>> pairs;
    if (k >= 0) {
      for (int v = 0; v <= 2 * M - k; ++v) pairs.emplace_back(-M + k + v, M - v);
    } else {
      for (int v = 0; v <= 2 * M + k; ++v) pairs.emplace_back(M + k - v, -M + v);
    }
    f.K.push_back(k);
    f.S.push_back(std::move(pairs));
  }
  return f;
}

inline GenericSpec make_generic_spec(Fiber fiber, const PSDFunction& c) {
  GenericSpec spec{std::move(fiber), {}};
  spec.c.reserve(spec.fiber.K.size());
  for (int k : spec.fiber.K) {
    if (std::abs(k) > c.max_lag()) throw Error("generic spec: c does not cover K");
    spec.c.push_back(c(k));
  }
  return spec;
}

// Literal quadruple sum over (l, l', k, (s, s')). Reference only: the cost is
// O(N_j N_j' sum_k |S(k)|) per entry. Exponentials are tabulated per asset.
inline VolMatrix estimate_generic(const IncrementTable& inc, const GenericSpec& spec, double t) {
  detail::check_time(t);
  spec.validate();
  const std::size_t d = inc.size();

  int s_min = 0, s_max = 0;
  for (const auto& pairs : spec.fiber.S)
    for (const auto& [s, sp] : pairs) {
      s_min = std::min({s_min, s, sp});
      s_max = std::max({s_max, s, sp});
    }
  const int width = s_max - s_min + 1;

  // phase[j][l * width + (s - s_min)] = e^{-2 pi i s t^j_l}
  std::vector<std::vector<cplx>> phase(d);
  for (std::size_t j = 0; j < d; ++j) {
    phase[j].resize(inc[j].size() * width);
    for (std::size_t l = 0; l < inc[j].size(); ++l)
      for (int s = s_min; s <= s_max; ++s)
        phase[j][l * width + (s - s_min)] = detail::unit_phase(-s * inc[j].times[l]);
  }
  std::vector<cplx> weight(spec.c.size());
  for (std::size_t i = 0; i < spec.c.size(); ++i)
    weight[i] = spec.c[i] * detail::unit_phase(spec.fiber.K[i] * t);

  VolMatrix out{t, Matrix(d, d), 0.0, false};
  std::vector<std::vector<cplx>> raw(d, std::vector<cplx>(d));
  double scale = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t jp = 0; jp < d; ++jp) {
      cplx total = 0.0;
      for (std::size_t l = 0; l < inc[j].size(); ++l) {
        const cplx* ej = &phase[j][l * width];
        for (std::size_t lp = 0; lp < inc[jp].size(); ++lp) {
          const cplx* ejp = &phase[jp][lp * width];
          cplx acc = 0.0;
          for (std::size_t i = 0; i < weight.size(); ++i) {
            cplx fiber_sum = 0.0;
            for (const auto& [s, sp] : spec.fiber.S[i]) fiber_sum += ej[s - s_min] * ejp[sp - s_min];
            acc += weight[i] * fiber_sum;
          }
          total += acc * (inc[j].deltas[l] * inc[jp].deltas[lp]);
        }
      }
      raw[j][jp] = total;
      out.entries(j, jp) = total.real();
      scale = std::max(scale, std::abs(total.real()));
    }
  }
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t jp = 0; jp < d; ++jp) {
      const double im = std::abs(raw[j][jp].imag());
      out.imag_residue = std::max(out.imag_residue, im);
      if (im > 1e-9 * std::max(std::abs(raw[j][jp].real()), scale)) out.imag_warning = true;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Classical estimator in kernel-product form:
//   (1/(2M+1)) sum_{l,l'} K_{L+1}(t - t^j_l) D_M(t^j_l - t^{j'}_{l'}) dX^j_l dX^{j'}_{l'}
// Not symmetric in general.

inline VolMatrix estimate_classical(const IncrementTable& inc, int M, int L, double t) {
  detail::check_time(t);
  if (M < 1) throw Error("estimate_classical: M must be >= 1");
  if (L < 0) throw Error("estimate_classical: L must be >= 0");
  const std::size_t d = inc.size();
  VolMatrix out{t, Matrix(d, d), 0.0, false};
  const double norm = 1.0 / (2.0 * M + 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t l = 0; l < inc[j].size(); ++l) {
      const double tl = inc[j].times[l];
      const double left = fejer_eval(L + 1, t - tl) * inc[j].deltas[l] * norm;
      if (left == 0.0) continue;
      for (std::size_t jp = 0; jp < d; ++jp) {
        double acc = 0.0;
        for (std::size_t lp = 0; lp < inc[jp].size(); ++lp)
          acc += dirichlet_eval(M, tl - inc[jp].times[lp]) * inc[jp].deltas[lp];
        out.entries(j, jp) += left * acc;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// PSD estimator, direct form: entry(j,j') = sum_{u,u'} c(u-u') g_j(u) conj(g_j'(u'))
// with g_j(u) = e^{2 pi i u t} a_j(u).

inline VolMatrix estimate_psd_direct(const FourierCoefficients& a, const PSDFunction& c, double t) {
  detail::check_time(t);
  const int M = a.M();
  if (c.M() < M) throw Error("estimate_psd_direct: c does not cover k = -2M..2M");
  const std::size_t d = a.d();
  const int n = 2 * M + 1;

  std::vector<cplx> g(d * n);
  for (std::size_t j = 0; j < d; ++j)
    for (int u = -M; u <= M; ++u) g[j * n + (u + M)] = detail::unit_phase(u * t) * a(j, u);

  // h_j'(u) = sum_{u'} c(u-u') conj(g_j'(u'))
  std::vector<cplx> h(d * n);
  for (std::size_t jp = 0; jp < d; ++jp)
    for (int u = -M; u <= M; ++u) {
      cplx acc = 0.0;
      for (int up = -M; up <= M; ++up) acc += c(u - up) * std::conj(g[jp * n + (up + M)]);
      h[jp * n + (u + M)] = acc;
    }

  VolMatrix out{t, Matrix(d, d), 0.0, false};
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t jp = 0; jp < d; ++jp) {
      cplx acc = 0.0;
      for (int u = 0; u < n; ++u) acc += g[j * n + u] * h[jp * n + u];
      out.entries(j, jp) = acc.real();
      out.imag_residue = std::max(out.imag_residue, std::abs(acc.imag()));
    }
  return out;
}

inline VolMatrix estimate_psd_direct(const IncrementTable& inc, const PSDFunction& c, double t) {
  return estimate_psd_direct(fourier_coefficients(inc, c.M()), c, t);
}

// ---------------------------------------------------------------------------
// PSD estimator, factorized form:
//   entry(j,j') = sum_q w_q S_j(t, y_q) S_j'(t, y_q),
//   S_j(t, y) = sum_l D_M(t - t_l + y) dX_l = sum_{|s|<=M} e^{2 pi i s (t+y)} a_j(s).
// Exactly symmetric: each off-diagonal pair is computed once and mirrored.

// S_j(t, y_q) for every asset j and atom q, row-major [q][j].
inline std::vector<double> smoothed_sums(const FourierCoefficients& a, const SpectralMeasure& mu, double t) {
  const int M = a.M();
  const std::size_t d = a.d();
  const std::size_t Q = mu.size();
  std::vector<double> S(Q * d);
  std::vector<cplx> phase(M + 1);
  for (std::size_t q = 0; q < Q; ++q) {
    const double x = t + mu.atoms[q];
    for (int s = 1; s <= M; ++s) phase[s] = detail::unit_phase(s * x);
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int s = 1; s <= M; ++s) {
        const cplx z = a(j, s);
        acc += phase[s].real() * z.real() - phase[s].imag() * z.imag();
      }
      S[q * d + j] = a(j, 0).real() + 2.0 * acc;
    }
  }
  return S;
}

inline VolMatrix estimate_psd_factorized(const FourierCoefficients& a, const SpectralMeasure& mu, double t) {
  detail::check_time(t);
  mu.validate();
  const std::size_t d = a.d();
  const auto S = smoothed_sums(a, mu, t);
  VolMatrix out{t, Matrix(d, d), 0.0, false};
  for (std::size_t q = 0; q < mu.size(); ++q) {
    const double w = mu.weights[q];
    if (w == 0.0) continue;
    const double* row = &S[q * d];
    for (std::size_t j = 0; j < d; ++j) {
      const double wj = w * row[j];
      for (std::size_t jp = j; jp < d; ++jp) out.entries(j, jp) += wj * row[jp];
    }
  }
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t jp = j + 1; jp < d; ++jp) out.entries(jp, j) = out.entries(j, jp);
  return out;
}

inline VolMatrix estimate_psd_factorized(const IncrementTable& inc, const SpectralMeasure& mu, int M, double t) {
  return estimate_psd_factorized(fourier_coefficients(inc, M), mu, t);
}

// ---------------------------------------------------------------------------
// Path evaluation over a grid.

namespace detail {

// Runs body(i) for i in [0, n) on up to `threads` workers. Results are
// written by index, so scheduling never affects output. The first exception
// by grid index is rethrown.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    run(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run, begin, end);
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

// Thread count from SPOTVOL_THREADS, or 1 when unset or malformed.
inline unsigned threads_from_env() {
  if (const char* v = std::getenv("SPOTVOL_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end != v && *end == '\0' && n >= 1) return static_cast<unsigned>(n);
  }
  return 1;
}

inline VolPath estimate_path(const IncrementTable& inc, const EstimatorConfig& config) {
  config.validate();
  if (inc.empty()) throw Error("no assets");
  VolPath path{std::vector<VolMatrix>(config.eval_grid.size()), config};

  FourierCoefficients coefs;
  SpectralMeasure mu;
  PSDFunction c;
  GenericSpec spec;
  switch (config.method) {
    case Method::psd_factorized:
      coefs = fourier_coefficients(inc, config.M);
      mu = make_measure(config.kernel, config.M);
      break;
    case Method::psd_direct:
      coefs = fourier_coefficients(inc, config.M);
      c = c_from_measure(make_measure(config.kernel, config.M), config.M);
      break;
    case Method::generic:
      spec = make_generic_spec(build_fiber(config.M), c_from_measure(make_measure(config.kernel, config.M), config.M));
      break;
    case Method::classical:
      break;
  }

  detail::parallel_for(config.eval_grid.size(), config.threads, [&](std::size_t i) {
    const double t = config.eval_grid[i];
    try {
      switch (config.method) {
        case Method::psd_factorized: path.points[i] = estimate_psd_factorized(coefs, mu, t); break;
        case Method::psd_direct: path.points[i] = estimate_psd_direct(coefs, c, t); break;
        case Method::generic: path.points[i] = estimate_generic(inc, spec, t); break;
        case Method::classical: path.points[i] = estimate_classical(inc, config.M, config.fejer_order(), t); break;
      }
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "at t = " << t << ": " << e.what();
      throw Error(msg.str());
    }
  });
  return path;
}

inline VolPath estimate_path(const ObservationSet& obs, const EstimatorConfig& config) {
  config.validate();
  return estimate_path(increments(obs), config);
}

// ---------------------------------------------------------------------------
// VolPath CSV: `t,V_1_1,V_1_2,...`. Symmetric paths are written as the
// row-major upper triangle; anything else as the full matrix. Columns are
// matched by name on load and a missing (j,i) is mirrored from (i,j).

inline bool is_symmetric_path(const VolPath& path) {
  for (const auto& p : path.points)
    if (p.entries.max_asymmetry() != 0.0) return false;
  return true;
}

inline void write_vol_csv(std::ostream& out, const VolPath& path) {
  const std::size_t d = path.d();
  const bool upper = is_symmetric_path(path);
  const auto old_precision = out.precision(17);
  out << 't';
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = upper ? i : 0; j < d; ++j) out << ",V_" << i + 1 << '_' << j + 1;
  out << '\n';
  for (const auto& p : path.points) {
    out << p.t;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = upper ? i : 0; j < d; ++j) out << ',' << p.entries(i, j);
    out << '\n';
  }
  out.precision(old_precision);
}

inline VolPath read_vol_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<std::size_t, std::size_t>> columns;
  std::size_t d = 0;
  bool header_seen = false;
  VolPath path;

  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const auto fields = detail::split_csv(trimmed);
    if (!header_seen) {
      header_seen = true;
      if (fields.empty() || fields[0] != "t") throw Error("vol CSV: header must start with 't'");
      for (std::size_t c = 1; c < fields.size(); ++c) {
        const std::string name(fields[c]);
        std::size_t i = 0, j = 0;
        char tail = 0;
        if (std::sscanf(name.c_str(), "V_%zu_%zu%c", &i, &j, &tail) != 2 || i == 0 || j == 0)
          throw Error("vol CSV: bad column name '" + name + "'");
        columns.emplace_back(i - 1, j - 1);
        d = std::max({d, i, j});
      }
      if (d == 0) throw Error("vol CSV: no matrix columns");
      continue;
    }
    if (fields.size() != columns.size() + 1) {
      std::ostringstream msg;
      msg << "vol CSV line " << line_no << ": expected " << columns.size() + 1 << " fields";
      throw Error(msg.str());
    }
    VolMatrix m{detail::parse_double(fields[0], line_no), Matrix(d, d), 0.0, false};
    std::vector<char> seen(d * d, 0);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto [i, j] = columns[c];
      m.entries(i, j) = detail::parse_double(fields[c + 1], line_no);
      seen[i * d + j] = 1;
    }
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        if (seen[i * d + j]) continue;
        if (!seen[j * d + i]) {
          std::ostringstream msg;
          msg << "vol CSV: entry V_" << i + 1 << '_' << j + 1 << " missing";
          throw Error(msg.str());
        }
        m.entries(i, j) = m.entries(j, i);
      }
    if (!path.points.empty() && !(m.t > path.points.back().t))
      throw Error("vol CSV line " + std::to_string(line_no) + ": times must be strictly increasing");
    path.points.push_back(std::move(m));
  }
  if (!header_seen) throw Error("vol CSV: empty input");
  return path;
}

}  // namespace spotvol
