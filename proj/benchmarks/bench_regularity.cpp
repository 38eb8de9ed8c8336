#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "spde/grid.hpp"
#include "spde/regularity.hpp"

using namespace spde;

namespace {

std::vector<double> rough_field(const GridSpec& g, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> gauss;
  std::vector<double> u(g.cells());
  double w = 0.0;
  for (auto& v : u) {
    w += gauss(eng);
    v = w;
  }
  return u;
}

}  // namespace

static void BM_StructureFunctionSpace(benchmark::State& state) {
  const GridSpec g{1, int(state.range(0)), 8.0};
  const std::vector<std::vector<double>> fields{rough_field(g, 1),
                                                rough_field(g, 2)};
  const std::vector<int> lags{4, 6, 8, 12, 17, 25, 36, 52};
  for (auto _ : state) {
    benchmark::DoNotOptimize(structure_function_space(g, fields, lags, 2.0));
  }
  state.SetItemsProcessed(state.iterations() * int64_t(g.cells()));
}
BENCHMARK(BM_StructureFunctionSpace)->Arg(1024)->Arg(4096)->Arg(16384);

static void BM_EstimateHolder(benchmark::State& state) {
  const GridSpec g{1, 4096, 8.0};
  const std::vector<int> lags{4, 6, 8, 12, 17, 25, 36, 52};
  std::vector<StructureFunction> per_path;
  for (std::uint64_t p = 0; p < 16; ++p) {
    std::vector<std::vector<double>> fields{rough_field(g, 10 + p)};
    per_path.push_back(structure_function_space(g, fields, lags, 2.0));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_holder(per_path));
  }
}
BENCHMARK(BM_EstimateHolder);

BENCHMARK_MAIN();
