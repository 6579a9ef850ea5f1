#include <benchmark/benchmark.h>

#include "gfpeel/growth_frag.hpp"
#include "gfpeel/levy.hpp"
#include "gfpeel/nu_table.hpp"
#include "gfpeel/peeling.hpp"
#include "gfpeel/stable.hpp"
#include "gfpeel/statistics.hpp"

using namespace gfpeel;

namespace {

const NuTable& closed_table() {
  static const NuTable nu = build_nu(WeightSequence::explicit_family(1.25), 100000, NuMethod::closed_form);
  return nu;
}

void BM_BuildNu(benchmark::State& state) {
  const WeightSequence ws = WeightSequence::explicit_family(1.25);
  const auto method = static_cast<NuMethod>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(build_nu(ws, state.range(0), method));
}
BENCHMARK(BM_BuildNu)
    ->Args({10000, static_cast<int>(NuMethod::harmonicity)})
    ->Args({10000, static_cast<int>(NuMethod::tutte)})
    ->Args({100000, static_cast<int>(NuMethod::closed_form)})
    ->Unit(benchmark::kMillisecond);

void BM_ChainStep(benchmark::State& state) {
  const NuTable& nu = closed_table();
  const auto regime = static_cast<ChainRegime>(state.range(0));
  Rng rng = replicate_rng(1, 0);
  long m = 400;
  for (auto _ : state) {
    m = step_perimeter_chain(regime, m, nu, rng);
    if (m == 0 || m > 100000) m = 400;
  }
}
BENCHMARK(BM_ChainStep)->DenseRange(0, 2);

void BM_PeelUntilDone(benchmark::State& state) {
  const PeelKernel kernel(closed_table());
  Rng rng = replicate_rng(2, 0);
  for (auto _ : state) benchmark::DoNotOptimize(peel_until_done(state.range(0), kernel, rng, 100000000));
}
BENCHMARK(BM_PeelUntilDone)->Arg(1)->Arg(10)->Arg(50)->Unit(benchmark::kMicrosecond);

void BM_PositiveStable(benchmark::State& state) {
  Rng rng = replicate_rng(3, 0);
  for (auto _ : state) benchmark::DoNotOptimize(sample_positive_stable(0.5714285714285714, rng));
}
BENCHMARK(BM_PositiveStable);

void BM_CellSystem(benchmark::State& state) {
  const CumulantFunction kappa = stable_cumulant(1.25);
  Truncation tr;
  tr.min_birth_size = 1e-2;
  tr.max_generation = static_cast<int>(state.range(0));
  const CellSystemSampler gf(kappa, tr);
  Rng rng = replicate_rng(4, 0);
  for (auto _ : state) benchmark::DoNotOptimize(gf.sample(1.0, rng));
}
BENCHMARK(BM_CellSystem)->Arg(0)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_PermutationKs(benchmark::State& state) {
  Rng rng = replicate_rng(5, 0);
  std::vector<double> a(10000), b(10000);
  for (double& x : a) x = uniform_open(rng);
  for (double& x : b) x = uniform_open(rng);
  const WeightedSample sa(a), sb(b);
  for (auto _ : state) benchmark::DoNotOptimize(ks_permutation_test(sa, sb, 100, 6));
}
BENCHMARK(BM_PermutationKs)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
