#include "oracles.hpp"

#include "pf2/mttkrp.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace pf2;

struct Problem {
  IrregularTensor tensor;
  std::vector<Matrix> q;
  Matrix h, w, v;
};

Problem make_problem(Index k, Index j, Index r) {
  std::mt19937_64 rng(42);
  Problem p;
  p.tensor = oracle::random_tensor(rng, k, j, 20, 60, 0.05);
  for (const auto& s : p.tensor.slices()) p.q.push_back(oracle::random_orthonormal(rng, s.rows(), r));
  p.h = oracle::random_matrix(rng, r, r);
  p.w = oracle::random_matrix(rng, k, r);
  p.v = oracle::random_matrix(rng, j, r);
  return p;
}

void BM_Slicewise(benchmark::State& state) {
  const auto mode = static_cast<Mode>(state.range(0));
  const auto p = make_problem(state.range(1), 100, 10);
  const auto ops = operands_of(p.tensor);
  const ImplicitY y(ops, p.q, p.tensor.n_cols());
  for (auto _ : state) benchmark::DoNotOptimize(slicewise_mttkrp(y, mode, p.h, p.w, p.v));
  state.SetLabel(std::string(mode_name(mode)));
}

void BM_Materialized(benchmark::State& state) {
  const auto mode = static_cast<Mode>(state.range(0));
  const auto p = make_problem(state.range(1), 100, 10);
  for (auto _ : state) {
    const auto dense = oracle::dense_slices(p.tensor);
    benchmark::DoNotOptimize(oracle::naive_mttkrp(dense, p.q, mode, p.h, p.w, p.v));
  }
  state.SetLabel(std::string(mode_name(mode)));
}

void BM_SlicewiseThreads(benchmark::State& state) {
  const auto p = make_problem(800, 100, 10);
  const auto ops = operands_of(p.tensor);
  const ImplicitY y(ops, p.q, p.tensor.n_cols());
  const ReductionPolicy policy{static_cast<int>(state.range(0)), state.range(1) != 0};
  for (auto _ : state) benchmark::DoNotOptimize(slicewise_mttkrp(y, Mode::V, p.h, p.w, p.v, policy));
}

BENCHMARK(BM_Slicewise)->ArgsProduct({{0, 1, 2}, {200, 800}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Materialized)->ArgsProduct({{0, 1, 2}, {200, 800}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SlicewiseThreads)->ArgsProduct({{1, 2, 4}, {0, 1}})->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
