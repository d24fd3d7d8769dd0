// spotvol: simulate tick data, estimate spot volatility matrices, run
// dynamic PCA, and benchmark the factorized estimator.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "spotvol/spotvol.hpp"

namespace fs = std::filesystem;
using namespace spotvol;

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

struct SimulateArgs {
  std::string model = "const-corr";
  std::size_t d = 2;
  double rho = 0.0;
  double a = 1.0;
  double b = 0.5;
  std::size_t r = 3;
  double eps = 0.05;
  std::size_t n = 150;
  std::size_t fine = 0;
  std::string sampling = "poisson";
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string ticks = "ticks.csv";
  std::string oracle = "oracle.csv";
  std::size_t oracle_grid = 150;
};

int cmd_simulate(const SimulateArgs& args) {
  SimModel model;
  if (args.model == "const-corr") {
    model = const_corr_model(args.d, args.rho);
  } else if (args.model == "sin-vol") {
    model = sin_vol_model(std::vector<double>(args.d, args.a), std::vector<double>(args.d, args.b), args.rho);
  } else if (args.model == "factor") {
    model = factor_model(default_loadings(args.d, args.r), args.eps);
  } else {
    throw Error("unknown model '" + args.model + "' (expected const-corr|sin-vol|factor)");
  }
  SamplingScheme scheme;
  if (args.sampling == "sync") scheme.kind = SamplingKind::sync_uniform;
  else if (args.sampling == "poisson") scheme.kind = SamplingKind::poisson;
  else throw Error("unknown sampling '" + args.sampling + "' (expected sync|poisson)");
  scheme.n_target = args.n;
  const std::size_t fine = args.fine ? args.fine : 10 * args.n;

  const auto sim = simulate(model, fine, args.seed);
  const auto obs = sample(sim.path, scheme, args.seed);

  const fs::path dir(args.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  {
    auto out = open_output(dir / args.ticks);
    write_ticks_csv(out, obs);
  }
  {
    auto out = open_output(dir / args.oracle);
    write_vol_csv(out, sim.oracle.on_grid(uniform_grid(args.oracle_grid)));
  }
  std::cout << "simulated model=" << args.model << " d=" << obs.d() << " seed=" << args.seed << '\n';
  for (const auto& s : obs.series) std::cout << "  " << s.asset_id << ": " << s.tick_count() << " ticks\n";
  std::cout << "wrote " << (dir / args.ticks).string() << " and " << (dir / args.oracle).string() << '\n';
  return 0;
}

struct EstimateArgs {
  std::string input = "ticks.csv";
  std::string output = "vol.csv";
  std::string method = "psd_factorized";
  std::string kernel = "gaussian";
  int M = 15;
  std::optional<int> L;
  std::optional<double> gamma;
  std::optional<double> l_gauss;
  int nodes = 0;
  std::size_t grid = 150;
  bool wrap = false;
  std::string price_kind = "log";
  unsigned threads = 0;
  bool per_real_time = false;
};

int cmd_estimate(const EstimateArgs& args) {
  EstimatorConfig cfg;
  cfg.method = parse_method(args.method);
  cfg.M = args.M;
  cfg.kernel.family = parse_kernel_family(args.kernel);
  cfg.kernel.nodes = args.nodes;
  cfg.kernel.wrap = args.wrap;

  const bool uses_kernel = cfg.method != Method::classical;
  if (args.L && cfg.method != Method::classical) throw Error("--L applies only to --method classical");
  if (!uses_kernel && (args.gamma || args.l_gauss || args.nodes || args.wrap))
    throw Error("kernel flags (--gamma, --l-gauss, --nodes, --wrap) do not apply to --method classical");
  if (args.gamma && cfg.kernel.family != KernelFamily::cauchy) throw Error("--gamma requires --kernel cauchy");
  if (args.l_gauss && cfg.kernel.family != KernelFamily::gaussian) throw Error("--l-gauss requires --kernel gaussian");
  cfg.kernel.gamma = args.gamma.value_or(1.0 / std::sqrt(2.0 * args.M + 1.0));
  cfg.kernel.l_gauss = args.l_gauss.value_or(2.0 * args.M + 1.0);
  if (args.L) cfg.L = *args.L;
  cfg.eval_grid = uniform_grid(args.grid);
  cfg.threads = args.threads ? args.threads : threads_from_env();

  PriceKind kind;
  if (args.price_kind == "log") kind = PriceKind::log;
  else if (args.price_kind == "raw") kind = PriceKind::raw;
  else throw Error("unknown price kind '" + args.price_kind + "' (expected log|raw)");

  const auto obs = load_csv(args.input, kind);
  const auto inc = increments(obs);
  const auto min_n = min_increment_count(inc);
  if (static_cast<std::size_t>(cfg.M) >= min_n)
    std::cerr << "warning: M = " << cfg.M << " >= smallest per-asset increment count " << min_n
              << "; frequency cutoff exceeds data resolution\n";

  auto path = estimate_path(inc, cfg);
  double worst_imag = 0.0;
  bool imag_warning = false;
  for (auto& p : path.points) {
    worst_imag = std::max(worst_imag, p.imag_residue);
    imag_warning = imag_warning || p.imag_warning;
    if (args.per_real_time) p.entries *= 1.0 / obs.time_span;
  }
  if (imag_warning)
    std::cerr << "warning: imaginary residue up to " << worst_imag << " dropped; weights c may not be Hermitian\n";

  auto out = open_output(args.output);
  write_vol_csv(out, path);
  std::cout << "estimated " << path.size() << " matrices (d=" << obs.d() << ", method=" << to_string(cfg.method)
            << ", M=" << cfg.M;
  if (uses_kernel) std::cout << ", kernel=" << to_string(cfg.kernel.family);
  std::cout << ") -> " << args.output << '\n';
  return 0;
}

struct PcaArgs {
  std::string input = "vol.csv";
  std::string csv = "pca.csv";
  std::string svg = "pca.svg";
  std::size_t top = 3;
  std::optional<double> rank_threshold;
};

int cmd_pca(const PcaArgs& args) {
  std::ifstream in(args.input);
  if (!in) throw Error("cannot open '" + args.input + "'");
  const auto path = read_vol_csv(in);
  const auto pca = pca_ratios(path, args.top);
  {
    auto out = open_output(args.csv);
    write_pca_csv(out, pca);
  }
  {
    auto out = open_output(args.svg);
    write_pca_svg(out, pca, "Dynamic PCA: cumulative eigenvalue shares");
  }
  std::cout << "pca over " << pca.size() << " times -> " << args.csv << ", " << args.svg << '\n';
  if (args.rank_threshold) {
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& r : pca) {
      const auto k = rank_estimate(r, *args.rank_threshold);
      lo = std::min(lo, k);
      hi = std::max(hi, k);
    }
    std::cout << "rank at threshold " << *args.rank_threshold << ": " << lo;
    if (hi != lo) std::cout << ".." << hi;
    std::cout << '\n';
  }
  return 0;
}

int cmd_bench(const BenchOptions& opt) {
  const auto rep = run_bench(opt);
  std::cout << std::setprecision(4) << "bench d=" << opt.d << " n=" << opt.n << " M=" << opt.M
            << " grid=" << opt.grid << " reps=" << opt.repetitions << '\n'
            << "  agreement (rel. Frobenius):     " << rep.agreement << '\n'
            << "  reference, single t:            " << rep.reference_seconds << " s\n"
            << "  factorized, single t:           " << rep.factorized_seconds << " s\n"
            << "  speedup, single t:              " << rep.speedup << "x\n"
            << "  factorized, full grid:          " << rep.factorized_grid_seconds << " s\n"
            << "  reference, full grid (extrap.): " << rep.reference_grid_seconds_extrapolated << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fourier spot volatility estimation with positive semi-definite output"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a model with known spot volatility and sample ticks");
  s->add_option("--model", sim.model, "const-corr | sin-vol | factor")->capture_default_str();
  s->add_option("--d", sim.d, "Number of assets")->capture_default_str();
  s->add_option("--rho", sim.rho, "Common correlation (const-corr, sin-vol)")->capture_default_str();
  s->add_option("--a", sim.a, "sin-vol level a (vol = a + b sin 2 pi t)")->capture_default_str();
  s->add_option("--b", sim.b, "sin-vol amplitude b")->capture_default_str();
  s->add_option("--r", sim.r, "Factor count (factor model)")->capture_default_str();
  s->add_option("--eps", sim.eps, "Idiosyncratic vol (factor model)")->capture_default_str();
  s->add_option("--n", sim.n, "Target ticks per asset")->capture_default_str();
  s->add_option("--fine", sim.fine, "Euler steps (default 10 n)");
  s->add_option("--sampling", sim.sampling, "sync | poisson")->capture_default_str();
  s->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  s->add_option("--out-dir", sim.out_dir, "Output directory")->capture_default_str();
  s->add_option("--ticks", sim.ticks, "Ticks file name")->capture_default_str();
  s->add_option("--oracle", sim.oracle, "Oracle vol file name")->capture_default_str();
  s->add_option("--oracle-grid", sim.oracle_grid, "Oracle evaluation points")->capture_default_str();

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "Estimate the spot volatility matrix path from ticks");
  e->add_option("--input", est.input, "Ticks CSV (asset,time,price)")->capture_default_str();
  e->add_option("--output", est.output, "Vol path CSV")->capture_default_str();
  e->add_option("--method", est.method, "psd_factorized | psd_direct | generic | classical")->capture_default_str();
  e->add_option("--kernel", est.kernel, "flat | cauchy | gaussian | fejer")->capture_default_str();
  e->add_option("--M", est.M, "Frequency cutoff M")->capture_default_str();
  e->add_option("--L", est.L, "Fejer order for --method classical (default M)");
  e->add_option("--gamma", est.gamma,
                "Cauchy scale (default (2M+1)^{-1/2}, 0.1796 at M=15; (2M+1)^{-1/4} = 0.4238 is another choice)");
  e->add_option("--l-gauss", est.l_gauss, "Gaussian rate L (default 2M+1 = 31 at M=15; (M+1)^{1/4} = 2.36 is another)");
  e->add_option("--nodes", est.nodes, "Quadrature nodes on [-1/2,1/2) (default 2M+1)");
  e->add_option("--grid", est.grid, "Equispaced evaluation times on [0,1]")->capture_default_str();
  e->add_flag("--wrap", est.wrap, "Periodize the continuous kernel density before sampling");
  e->add_option("--price-kind", est.price_kind, "log | raw (raw prices are log-transformed)")->capture_default_str();
  e->add_option("--threads", est.threads, "Worker threads (default: SPOTVOL_THREADS or 1)");
  e->add_flag("--per-real-time", est.per_real_time, "Report variance per unit of input time instead of per [0,1]");

  PcaArgs pca;
  auto* p = app.add_subcommand("pca", "Dynamic PCA of a vol path: eigenvalues and explained-variance ratios");
  p->add_option("--input", pca.input, "Vol path CSV")->capture_default_str();
  p->add_option("--csv", pca.csv, "Output ratios CSV")->capture_default_str();
  p->add_option("--svg", pca.svg, "Output SVG chart")->capture_default_str();
  p->add_option("--top", pca.top, "Number of cumulative ratios")->capture_default_str();
  p->add_option("--rank-threshold", pca.rank_threshold, "Report the rank reaching this explained share");

  BenchOptions bench;
  auto* b = app.add_subcommand("bench", "Time the quadruple-sum estimator against the factorized one");
  b->add_option("--d", bench.d, "Assets")->capture_default_str();
  b->add_option("--n", bench.n, "Ticks per asset")->capture_default_str();
  b->add_option("--M", bench.M, "Frequency cutoff")->capture_default_str();
  b->add_option("--grid", bench.grid, "Evaluation grid size")->capture_default_str();
  b->add_option("--reps", bench.repetitions, "Repetitions (best time kept)")->capture_default_str();
  b->add_option("--seed", bench.seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  try {
    if (*s) return cmd_simulate(sim);
    if (*e) return cmd_estimate(est);
    if (*p) return cmd_pca(pca);
    if (*b) return cmd_bench(bench);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 1;
}
