#pragma once

#include <cstdint>

#include "spotvol/spotvol.hpp"

namespace spotvol::test {

// const_corr d=2, rho=0.5, 150 Poisson ticks per asset, M=15, Gaussian
// kernel L=31 on 31 nodes, 150-point grid; mean relative Frobenius error on
// [0.1, 0.9] averaged over seeds 1..20.
inline double accuracy_experiment(Method method, int seeds = 20) {
  const auto model = const_corr_model(2, 0.5);
  EstimatorConfig cfg;
  cfg.method = method;
  cfg.M = 15;
  cfg.kernel = KernelParams{KernelFamily::gaussian, 0.0, 31.0, 31, false};
  const auto full = uniform_grid(150);
  for (double t : full)
    if (t >= 0.1 - 1e-12 && t <= 0.9 + 1e-12) cfg.eval_grid.push_back(t);

  double total = 0.0;
  for (int seed = 1; seed <= seeds; ++seed) {
    const auto sim = simulate(model, 1500, static_cast<std::uint64_t>(seed));
    const auto obs = sample(sim.path, SamplingScheme{SamplingKind::poisson, 150}, static_cast<std::uint64_t>(seed));
    total += score(estimate_path(obs, cfg), sim.oracle, 0.1).mean_rel_error;
  }
  return total / seeds;
}

}  // namespace spotvol::test
