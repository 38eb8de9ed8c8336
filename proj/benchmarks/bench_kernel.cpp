#include <benchmark/benchmark.h>

#include "spde/covariance.hpp"

using namespace spde;

static void BM_BesselKernelEval(benchmark::State& state) {
  const double gamma = 0.8;
  const int d = int(state.range(0));
  double r = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bessel_kernel(gamma, d, r));
    r = r < 8.0 ? r + 0.05 : 0.1;
  }
}
BENCHMARK(BM_BesselKernelEval)->Arg(1)->Arg(2)->Arg(3);

static void BM_BesselTabulation(benchmark::State& state) {
  const int n = int(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(tabulate_bessel_kernel(0.8, 1.0, 1, n, 40.0));
  }
}
BENCHMARK(BM_BesselTabulation)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_SelfConvolution1d(benchmark::State& state) {
  const int n = int(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernel_self_convolution(0.8, 1.0, 1, n, 40.0));
  }
}
BENCHMARK(BM_SelfConvolution1d)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);
