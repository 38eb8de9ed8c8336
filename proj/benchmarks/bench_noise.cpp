#include <benchmark/benchmark.h>

#include <vector>

#include "spde/covariance.hpp"
#include "spde/grid.hpp"
#include "spde/noise.hpp"
#include "spde/rng.hpp"

using namespace spde;

static void BM_SamplerBuildGaussian(benchmark::State& state) {
  const GridSpec g{2, int(state.range(0)), 16.0};
  const auto mu = SpectralMeasure::for_model(CovarianceModel::gaussian(2, 1.0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(NoiseSampler::build(mu, g));
  }
}
BENCHMARK(BM_SamplerBuildGaussian)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_SampleIncrement(benchmark::State& state) {
  const GridSpec g{1, int(state.range(0)), 16.0};
  const auto sampler = NoiseSampler::build(
      SpectralMeasure::for_model(CovarianceModel::gaussian(1, 1.0)), g);
  SamplerWorkspace ws(g);
  RngStream rng(1, 0);
  std::vector<double> out(g.cells());
  for (auto _ : state) {
    sampler.sample_into(1e-4, rng, ws, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(g.cells()));
}
BENCHMARK(BM_SampleIncrement)->Arg(256)->Arg(1024)->Arg(4096);

static void BM_SampleIncrement2d(benchmark::State& state) {
  const GridSpec g{2, int(state.range(0)), 16.0};
  const auto sampler = NoiseSampler::build(
      SpectralMeasure::for_model(CovarianceModel::gaussian(2, 1.0)), g);
  SamplerWorkspace ws(g);
  RngStream rng(1, 0);
  std::vector<double> out(g.cells());
  for (auto _ : state) {
    sampler.sample_into(1e-4, rng, ws, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(g.cells()));
}
BENCHMARK(BM_SampleIncrement2d)->Arg(64)->Arg(128);
