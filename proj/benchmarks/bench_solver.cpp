#include <benchmark/benchmark.h>

#include <vector>

#include "spde/covariance.hpp"
#include "spde/grid.hpp"
#include "spde/noise.hpp"
#include "spde/rng.hpp"
#include "spde/solver.hpp"

using namespace spde;

namespace {

std::vector<double> sample_noise(const GridSpec& g) {
  const auto sampler = NoiseSampler::build(
      SpectralMeasure::for_model(CovarianceModel::white(g.d)), g);
  return sample_increment(sampler, 1e-4, 1, 0).values;
}

}  // namespace

static void BM_StepSpectral(benchmark::State& state) {
  const GridSpec g{1, int(state.range(0)), 8.0};
  const auto co = Coefficients::heat(1);
  DiffusionSpec ds;
  ds.lambda = 0.25;
  Stepper st(g, co, ds);
  SimulationState s{g, 0.0, std::vector<double>(g.cells(), 1.0)};
  const auto noise = sample_noise(g);
  for (auto _ : state) {
    st.step(s, noise, 1e-4);
    benchmark::DoNotOptimize(s.u.data());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(g.cells()));
}
BENCHMARK(BM_StepSpectral)->Arg(256)->Arg(1024)->Arg(4096);

static void BM_StepIterative(benchmark::State& state) {
  const GridSpec g{1, int(state.range(0)), 8.0};
  const auto co = Coefficients::preset("variable_a", 1);
  DiffusionSpec ds;
  ds.lambda = 0.25;
  Stepper st(g, co, ds);
  SimulationState s{g, 0.0, std::vector<double>(g.cells(), 1.0)};
  const auto noise = sample_noise(g);
  for (auto _ : state) {
    st.step(s, noise, 1e-4);
    benchmark::DoNotOptimize(s.u.data());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(g.cells()));
}
BENCHMARK(BM_StepIterative)->Arg(256)->Arg(1024);

static void BM_LyapunovCheck(benchmark::State& state) {
  const GridSpec g{1, int(state.range(0)), 20.0};
  const auto co = Coefficients::preset("variable_a", 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lyapunov_check(co, g, {1.0, 2.0, 4.0}));
  }
}
BENCHMARK(BM_LyapunovCheck)->Arg(1024)->Unit(benchmark::kMillisecond);
