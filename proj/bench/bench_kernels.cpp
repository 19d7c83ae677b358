#include <benchmark/benchmark.h>

#include "dreg/regularize.hpp"
#include "dreg/simulate.hpp"

using namespace dreg;

namespace {

const ModelSpec kBm{BrownianMotion{1.0}};

CadlagPath bm_path(std::size_t steps, std::uint64_t seed) {
  return simulate_path(kBm, TimeGrid(1.0, steps), SeedSpec{seed, 0}).path;
}

// the O(n^2) reference is only run on small grids
void BM_CovariationReference(benchmark::State& st) {
  const CadlagPath x = bm_path(st.range(0), 1), y = bm_path(st.range(0), 2);
  for (auto _ : st) benchmark::DoNotOptimize(reference::covariation_eps(x, y, 8));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_CovariationReference)->RangeMultiplier(4)->Range(256, 4096)->Complexity();

void BM_Covariation(benchmark::State& st) {
  const CadlagPath x = bm_path(st.range(0), 1), y = bm_path(st.range(0), 2);
  for (auto _ : st) benchmark::DoNotOptimize(covariation_eps(x, y, std::size_t{8}));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_Covariation)->RangeMultiplier(4)->Range(256, 65536)->Complexity();

void BM_ForwardIntegralReference(benchmark::State& st) {
  const CadlagPath x = bm_path(st.range(0), 3), y = bm_path(st.range(0), 4);
  for (auto _ : st) benchmark::DoNotOptimize(reference::forward_integral_eps(y, x, 8));
}
BENCHMARK(BM_ForwardIntegralReference)->RangeMultiplier(4)->Range(256, 4096);

void BM_ForwardIntegral(benchmark::State& st) {
  const CadlagPath x = bm_path(st.range(0), 3), y = bm_path(st.range(0), 4);
  for (auto _ : st) benchmark::DoNotOptimize(forward_integral_eps(y, x, std::size_t{8}));
}
BENCHMARK(BM_ForwardIntegral)->RangeMultiplier(4)->Range(256, 65536);

void BM_EnsembleReference(benchmark::State& st) {
  const TimeGrid g(1.0, 1000);
  for (auto _ : st) benchmark::DoNotOptimize(reference::simulate_ensemble(kBm, g, 5, st.range(0)));
}
BENCHMARK(BM_EnsembleReference)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_Ensemble(benchmark::State& st) {
  const TimeGrid g(1.0, 1000);
  for (auto _ : st) benchmark::DoNotOptimize(simulate_ensemble(kBm, g, 5, st.range(0)));
}
BENCHMARK(BM_Ensemble)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
