#include "pf2/solver.hpp"
#include "pf2/synthetic.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace pf2;

SyntheticData make_data(Index k) {
  SynthConfig cfg;
  cfg.n_slices = k;
  cfg.n_cols = 100;
  cfg.rank = 10;
  cfg.rows_min = 20;
  cfg.rows_max = 60;
  cfg.density = 0.3;
  cfg.noise_level = 0.05;
  cfg.seed = 7;
  return generate_synthetic(cfg);
}

// Ten outer iterations; the tolerance is tiny so the cap always binds.
void BM_FitIterations(benchmark::State& state) {
  const auto data = make_data(state.range(0));
  ConstraintSpec spec;
  if (state.range(1) == 1) spec.on_h = spec.on_w = spec.on_v = ConstraintKind::non_negative();
  if (state.range(1) == 2) spec.on_v = ConstraintKind::l0(1e-3);
  FitOptions opts;
  opts.rank = 10;
  opts.max_outer_iters = 10;
  opts.outer_tol = 1e-300;
  for (auto _ : state) benchmark::DoNotOptimize(fit(data.tensor, spec, opts));
  static const char* kLabels[] = {"none", "nonneg", "l0"};
  state.SetLabel(kLabels[state.range(1)]);
}

void BM_FitIterationsSmooth(benchmark::State& state) {
  const auto data = make_data(state.range(0));
  ConstraintSpec spec;
  spec.smoothness = SmoothnessConfig{12, 3, true};
  FitOptions opts;
  opts.rank = 10;
  opts.max_outer_iters = 10;
  opts.outer_tol = 1e-300;
  for (auto _ : state) benchmark::DoNotOptimize(fit(data.tensor, spec, opts));
}

BENCHMARK(BM_FitIterations)->ArgsProduct({{200, 800}, {0, 1, 2}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitIterationsSmooth)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
