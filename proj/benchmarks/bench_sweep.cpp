#include "easimix/gibbs.hpp"
#include "easimix/synthgen.hpp"

#include <benchmark/benchmark.h>

using namespace easimix;

namespace {

void BM_GibbsSweep(benchmark::State& state) {
  const SyntheticSample sample =
      generate_population(reference_truth(ReferenceDesign::TwoCluster, 1), static_cast<int>(state.range(0)));
  ChainSettings settings;
  settings.sweeps = 2;
  settings.burn_in = 0;
  settings.thin = 1;
  GibbsSampler sampler(sample.data, PriorHyperparams::defaults(sample.data.dims), settings);
  SamplerState st = sampler.initial_state();
  long index = 1;
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sweep(st, index++));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_GibbsSweep)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);
