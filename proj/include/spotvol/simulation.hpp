#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "spotvol/eigen.hpp"
#include "spotvol/error.hpp"
#include "spotvol/estimator.hpp"
#include "spotvol/market_data.hpp"
#include "spotvol/matrix.hpp"
#include "spotvol/spectral.hpp"

namespace spotvol {

// ---------------------------------------------------------------------------
// Random numbers: xoshiro256++ seeded through splitmix64. Written out here
// (rather than std::normal_distribution) so streams are identical on every
// standard library.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Seed for an independent substream of `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = stream ^ 0xD1B54A32D192ED03ULL;
  const std::uint64_t mix = splitmix64(s);
  std::uint64_t t = seed ^ mix;
  return splitmix64(t);
}

class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0,1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Standard normal by Box-Muller; the second variate is kept for the next call.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0,1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double exponential(double rate) { return -std::log(1.0 - uniform()) / rate; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Models with closed-form spot volatility.

enum class ModelKind { const_corr, sin_vol, factor };

struct SimModel {
  ModelKind kind = ModelKind::const_corr;
  std::size_t d = 1;
  Matrix sigma;                     // const_corr: target covariance
  std::vector<double> a, b;         // sin_vol: vol_i(t) = a_i + b_i sin(2 pi t)
  double rho = 0.0;                 // sin_vol: common correlation
  Matrix loadings;                  // factor: d x r
  double eps = 0.0;                 // factor: idiosyncratic vol

  void validate() const;
};

// Square root A with A A^T = S for symmetric PSD S (via eigendecomposition, so
// singular S is fine).
inline Matrix psd_sqrt_factor(const Matrix& s, const std::string& what) {
  const auto eig = symm_eigen(s);
  const double tr = std::max(s.trace(), 0.0);
  if (eig.values.back() < -1e-12 * std::max(tr, 1e-300))
    throw Error(what + " is not positive semi-definite");
  const std::size_t n = s.rows();
  Matrix a(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double root = std::sqrt(std::max(eig.values[k], 0.0));
    for (std::size_t i = 0; i < n; ++i) a(i, k) = eig.vectors(i, k) * root;
  }
  return a;
}

inline Matrix equicorrelation(std::size_t d, double rho) {
  Matrix r(d, d, rho);
  for (std::size_t i = 0; i < d; ++i) r(i, i) = 1.0;
  return r;
}

inline void SimModel::validate() const {
  if (d < 1) throw Error("model: d must be >= 1");
  switch (kind) {
    case ModelKind::const_corr:
      if (sigma.rows() != d || sigma.cols() != d) throw Error("const_corr: sigma must be d x d");
      psd_sqrt_factor(sigma, "const_corr covariance");
      break;
    case ModelKind::sin_vol:
      if (a.size() != d || b.size() != d) throw Error("sin_vol: need d values of a and b");
      for (std::size_t i = 0; i < d; ++i)
        if (!(b[i] >= 0.0) || !(a[i] - b[i] > 0.0)) throw Error("sin_vol: need a_i > b_i >= 0");
      if (!(rho >= -1.0 && rho <= 1.0)) throw Error("sin_vol: rho outside [-1,1]");
      psd_sqrt_factor(equicorrelation(d, rho), "sin_vol correlation matrix");
      break;
    case ModelKind::factor:
      if (loadings.rows() != d || loadings.cols() < 1) throw Error("factor: loadings must be d x r, r >= 1");
      if (!(eps >= 0.0)) throw Error("factor: eps must be >= 0");
      break;
  }
}

inline SimModel const_corr_model(Matrix sigma) {
  SimModel m;
  m.kind = ModelKind::const_corr;
  m.d = sigma.rows();
  m.sigma = std::move(sigma);
  m.validate();
  return m;
}

// Unit variances with common correlation rho.
inline SimModel const_corr_model(std::size_t d, double rho, double variance = 1.0) {
  return const_corr_model(equicorrelation(d, rho) * variance);
}

inline SimModel sin_vol_model(std::vector<double> a, std::vector<double> b, double rho) {
  SimModel m;
  m.kind = ModelKind::sin_vol;
  m.d = a.size();
  m.a = std::move(a);
  m.b = std::move(b);
  m.rho = rho;
  m.validate();
  return m;
}

inline SimModel factor_model(Matrix loadings, double eps) {
  SimModel m;
  m.kind = ModelKind::factor;
  m.d = loadings.rows();
  m.loadings = std::move(loadings);
  m.eps = eps;
  m.validate();
  return m;
}

// Yield-curve-like loadings: factor f is the Legendre polynomial P_f over
// d equispaced maturities in [-1,1], damped by 0.6^f (level, slope,
// curvature, ...).
inline Matrix default_loadings(std::size_t d, std::size_t r) {
  if (d < 1 || r < 1) throw Error("default_loadings: need d, r >= 1");
  Matrix lam(d, r);
  for (std::size_t i = 0; i < d; ++i) {
    const double x = d == 1 ? 0.0 : 2.0 * static_cast<double>(i) / static_cast<double>(d - 1) - 1.0;
    double p_prev = 1.0, p = x;
    for (std::size_t f = 0; f < r; ++f) {
      double value;
      if (f == 0) {
        value = 1.0;
      } else if (f == 1) {
        value = x;
      } else {
        const double n = static_cast<double>(f - 1);
        const double next = ((2.0 * n + 1.0) * x * p - n * p_prev) / (n + 1.0);
        p_prev = p;
        p = next;
        value = next;
      }
      lam(i, f) = value * std::pow(0.6, static_cast<double>(f));
    }
  }
  return lam;
}

// True spot covariance V(t) of a model.
class OracleVolPath {
 public:
  explicit OracleVolPath(SimModel model) : model_(std::move(model)) {}

  const SimModel& model() const noexcept { return model_; }

  Matrix at(double t) const {
    const std::size_t d = model_.d;
    switch (model_.kind) {
      case ModelKind::const_corr: return model_.sigma;
      case ModelKind::sin_vol: {
        Matrix v(d, d);
        const double s = std::sin(2.0 * std::numbers::pi * t);
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) {
            const double corr = i == j ? 1.0 : model_.rho;
            v(i, j) = (model_.a[i] + model_.b[i] * s) * (model_.a[j] + model_.b[j] * s) * corr;
          }
        return v;
      }
      case ModelKind::factor: {
        Matrix v = model_.loadings * model_.loadings.transposed();
        for (std::size_t i = 0; i < d; ++i) v(i, i) += model_.eps * model_.eps;
        return v;
      }
    }
    return {};
  }

  VolPath on_grid(const std::vector<double>& grid) const {
    VolPath p;
    for (double t : grid) p.points.push_back(VolMatrix{t, at(t), 0.0, false});
    return p;
  }

 private:
  SimModel model_;
};

// Log-price path on the equispaced grid k / steps, k = 0..steps.
struct FinePath {
  std::size_t steps = 0;
  std::size_t d = 0;
  std::vector<double> values;  // row-major [k][i]

  double operator()(std::size_t k, std::size_t i) const { return values[k * d + i]; }
};

struct Simulation {
  FinePath path;
  OracleVolPath oracle;
};

// Euler-Maruyama from X_0 = 0. Deterministic in (model, steps, seed).
inline Simulation simulate(const SimModel& model, std::size_t fine_steps, std::uint64_t seed) {
  model.validate();
  if (fine_steps < 1) throw Error("simulate: fine_steps must be >= 1");
  const std::size_t d = model.d;
  const double dt = 1.0 / static_cast<double>(fine_steps);
  const double sqdt = std::sqrt(dt);

  Matrix mix;  // maps the standard normal draw to the increment direction
  std::size_t noise_dim = d;
  switch (model.kind) {
    case ModelKind::const_corr: mix = psd_sqrt_factor(model.sigma, "const_corr covariance"); break;
    case ModelKind::sin_vol: mix = psd_sqrt_factor(equicorrelation(d, model.rho), "correlation matrix"); break;
    case ModelKind::factor: {
      const std::size_t r = model.loadings.cols();
      noise_dim = r + d;
      mix = Matrix(d, noise_dim);
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t f = 0; f < r; ++f) mix(i, f) = model.loadings(i, f);
        mix(i, r + i) = model.eps;
      }
      break;
    }
  }

  Xoshiro256pp rng(derive_seed(seed, 0x5041544855ULL));
  FinePath path{fine_steps, d, std::vector<double>((fine_steps + 1) * d, 0.0)};
  std::vector<double> z(noise_dim);
  for (std::size_t k = 0; k < fine_steps; ++k) {
    for (auto& x : z) x = rng.normal();
    const double t = static_cast<double>(k) * dt;
    const double s = std::sin(2.0 * std::numbers::pi * t);
    for (std::size_t i = 0; i < d; ++i) {
      double dx = 0.0;
      for (std::size_t m = 0; m < noise_dim; ++m) dx += mix(i, m) * z[m];
      dx *= sqdt;
      if (model.kind == ModelKind::sin_vol) dx *= model.a[i] + model.b[i] * s;
      path.values[(k + 1) * d + i] = path.values[k * d + i] + dx;
    }
  }
  return Simulation{std::move(path), OracleVolPath(model)};
}

enum class SamplingKind { sync_uniform, poisson };

struct SamplingScheme {
  SamplingKind kind = SamplingKind::poisson;
  std::size_t n_target = 150;
};

inline std::string asset_name(std::size_t j) { return "A" + std::to_string(j + 1); }

// Observation times snapped onto the fine grid. Poisson arrivals use one
// substream per asset; endpoints 0 and 1 are always included.
inline ObservationSet sample(const FinePath& path, const SamplingScheme& scheme, std::uint64_t seed) {
  if (scheme.n_target < 1) throw Error("sample: n_target must be >= 1");
  if (path.steps < 10 * scheme.n_target) throw Error("sample: fine grid must have >= 10 steps per target tick");
  const std::size_t fine = path.steps;
  ObservationSet obs;
  obs.series.resize(path.d);

  for (std::size_t j = 0; j < path.d; ++j) {
    std::vector<std::size_t> idx;
    if (scheme.kind == SamplingKind::sync_uniform) {
      if (fine % scheme.n_target != 0) throw Error("sample: fine steps must be a multiple of n_target for sync_uniform");
      const std::size_t stride = fine / scheme.n_target;
      for (std::size_t l = 0; l <= scheme.n_target; ++l) idx.push_back(l * stride);
    } else {
      constexpr int kMaxAttempts = 100;
      int attempt = 0;
      for (;; ++attempt) {
        if (attempt == kMaxAttempts) throw Error("sample: Poisson sampling produced < 2 ticks repeatedly");
        Xoshiro256pp rng(derive_seed(seed, (static_cast<std::uint64_t>(j) << 8) | static_cast<std::uint64_t>(attempt)));
        std::vector<std::size_t> draw;
        double t = rng.exponential(static_cast<double>(scheme.n_target));
        while (t < 1.0) {
          draw.push_back(static_cast<std::size_t>(std::llround(t * static_cast<double>(fine))));
          t += rng.exponential(static_cast<double>(scheme.n_target));
        }
        if (draw.size() < 2) continue;
        idx.push_back(0);
        for (std::size_t k : draw)
          if (k > 0 && k < fine && k != idx.back()) idx.push_back(k);
        idx.push_back(fine);
        break;
      }
    }
    auto& s = obs.series[j];
    s.asset_id = asset_name(j);
    for (std::size_t k : idx) {
      s.times.push_back(k == fine ? 1.0 : static_cast<double>(k) / static_cast<double>(fine));
      s.values.push_back(path(k, j));
    }
  }
  validate(obs);
  return obs;
}

// ---------------------------------------------------------------------------
// Accuracy against the oracle.

struct Scorecard {
  std::vector<double> times;
  std::vector<double> rel_errors;  // ||V_hat - V||_F / ||V||_F
  double mean_rel_error = 0.0;
  double max_rel_error = 0.0;
  double mean_ratio_error = 0.0;   // mean over t of max_m |r_m - r_m^oracle|
  double max_ratio_error = 0.0;
  bool ratios_available = true;
};

inline Scorecard score(const VolPath& est, const OracleVolPath& oracle, double burn = 0.1) {
  if (est.points.empty()) throw Error("score: empty estimate");
  if (!(burn >= 0.0 && burn < 0.5)) throw Error("score: burn must lie in [0, 0.5)");
  Scorecard sc;
  constexpr double slack = 1e-12;
  double ratio_sum = 0.0;
  for (const auto& p : est.points) {
    if (p.t < burn - slack || p.t > 1.0 - burn + slack) continue;
    const Matrix truth = oracle.at(p.t);
    const double err = (p.entries - truth).frobenius() / truth.frobenius();
    sc.times.push_back(p.t);
    sc.rel_errors.push_back(err);
    sc.mean_rel_error += err;
    sc.max_rel_error = std::max(sc.max_rel_error, err);

    if (sc.ratios_available) {
      try {
        const auto r_est = eigen_report(p, truth.rows());
        const auto r_true = eigen_report(VolMatrix{p.t, truth, 0.0, false}, truth.rows());
        double worst = 0.0;
        for (std::size_t m = 0; m < r_est.ratios.size(); ++m)
          worst = std::max(worst, std::abs(r_est.ratios[m] - r_true.ratios[m]));
        ratio_sum += worst;
        sc.max_ratio_error = std::max(sc.max_ratio_error, worst);
      } catch (const Error&) {
        sc.ratios_available = false;  // e.g. an asymmetric classical estimate
      }
    }
  }
  if (sc.times.empty()) throw Error("score: no evaluation times inside the scoring window");
  sc.mean_rel_error /= static_cast<double>(sc.times.size());
  if (sc.ratios_available) sc.mean_ratio_error = ratio_sum / static_cast<double>(sc.times.size());
  else sc.max_ratio_error = sc.mean_ratio_error = std::numeric_limits<double>::quiet_NaN();
  return sc;
}

}  // namespace spotvol
