#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <sstream>

#include "spotvol/estimator.hpp"
#include "spotvol/kernels.hpp"
#include "spotvol/simulation.hpp"

namespace spotvol {

struct BenchOptions {
  std::size_t d = 12;
  std::size_t n = 150;
  int M = 15;
  std::size_t grid = 150;
  int repetitions = 3;
  std::uint64_t seed = 1;
  double t = 0.5;
  KernelParams kernel{KernelFamily::gaussian, 0.0, 31.0, 0, false};
};

struct BenchReport {
  double agreement = 0.0;            // relative Frobenius gap at t
  double reference_seconds = 0.0;    // quadruple sum, single t (best of reps)
  double factorized_seconds = 0.0;   // precompute + one evaluation (best of reps)
  double factorized_grid_seconds = 0.0;
  double reference_grid_seconds_extrapolated = 0.0;
  double speedup = 0.0;              // reference_seconds / factorized_seconds
};

namespace detail {

template <class F>
double best_time(int reps, F&& f) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    f();
    const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start;
    best = std::min(best, el.count());
  }
  return best;
}

}  // namespace detail

// Times the literal quadruple-sum estimator against the factorized one on a
// simulated factor-model data set. Refuses to time anything unless both
// agree to 1e-9 first.
inline BenchReport run_bench(const BenchOptions& opt) {
  if (opt.repetitions < 1) throw Error("bench: repetitions must be >= 1");
  if (opt.d < 1 || opt.n < 1 || opt.M < 1 || opt.grid < 1) throw Error("bench: d, n, M, grid must be >= 1");

  const std::size_t r = std::min<std::size_t>(3, opt.d);
  const auto sim = simulate(factor_model(default_loadings(opt.d, r), 0.05), 10 * opt.n, opt.seed);
  const auto inc = increments(sample(sim.path, SamplingScheme{SamplingKind::poisson, opt.n}, opt.seed));

  const auto mu = make_measure(opt.kernel, opt.M);
  const auto spec = make_generic_spec(build_fiber(opt.M), c_from_measure(mu, opt.M));

  BenchReport rep;
  VolMatrix ref, fac;
  rep.reference_seconds = detail::best_time(opt.repetitions, [&] { ref = estimate_generic(inc, spec, opt.t); });
  rep.factorized_seconds = detail::best_time(opt.repetitions, [&] {
    fac = estimate_psd_factorized(fourier_coefficients(inc, opt.M), mu, opt.t);
  });
  rep.agreement = (ref.entries - fac.entries).frobenius() / std::max(ref.entries.frobenius(), 1e-300);
  if (!(rep.agreement <= 1e-9)) {
    std::ostringstream msg;
    msg << "bench: reference and factorized estimators disagree (relative gap " << rep.agreement << ")";
    throw InvariantViolation(msg.str());
  }

  EstimatorConfig cfg;
  cfg.method = Method::psd_factorized;
  cfg.M = opt.M;
  cfg.kernel = opt.kernel;
  cfg.eval_grid = uniform_grid(opt.grid);
  rep.factorized_grid_seconds = detail::best_time(opt.repetitions, [&] { (void)estimate_path(inc, cfg); });
  rep.reference_grid_seconds_extrapolated = rep.reference_seconds * static_cast<double>(opt.grid);
  rep.speedup = rep.reference_seconds / std::max(rep.factorized_seconds, 1e-12);
  return rep;
}

}  // namespace spotvol
