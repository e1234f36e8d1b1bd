#include <benchmark/benchmark.h>

#include <vector>

#include "gard/metrics.hpp"
#include "gard/random.hpp"
#include "gard/workbench/datasets.hpp"

namespace {

using namespace gard;

LabeledGraph ba_graph(std::size_t n) {
  Rng rng(7);
  return workbench::barabasi_albert(rng, n, 3);
}

std::vector<std::vector<double>> degree_sets(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> sizes(count, 40);
  auto corpus = workbench::gen_erdos_renyi(rng, sizes, 0.15);
  std::vector<std::vector<double>> out;
  for (const auto& g : corpus.graphs) out.push_back(degree_histogram(g));
  return out;
}

void BM_OrbitsParallel(benchmark::State& state) {
  auto g = ba_graph(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(orbit_counts_4(g));
}

void BM_OrbitsSerial(benchmark::State& state) {
  auto g = ba_graph(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(orbit_counts_4_serial(g));
}

void BM_MmdParallel(benchmark::State& state) {
  auto a = degree_sets(static_cast<std::size_t>(state.range(0)), 1);
  auto b = degree_sets(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(mmd_squared(a, b, DescriptorKind::kDegree));
}

void BM_MmdSerial(benchmark::State& state) {
  auto a = degree_sets(static_cast<std::size_t>(state.range(0)), 1);
  auto b = degree_sets(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(mmd_squared_serial(a, b, DescriptorKind::kDegree));
}

}  // namespace

BENCHMARK(BM_OrbitsParallel)->Arg(30)->Arg(60);
BENCHMARK(BM_OrbitsSerial)->Arg(30)->Arg(60);
BENCHMARK(BM_MmdParallel)->Arg(100)->Arg(300);
BENCHMARK(BM_MmdSerial)->Arg(100)->Arg(300);

BENCHMARK_MAIN();
