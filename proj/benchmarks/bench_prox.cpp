#include <benchmark/benchmark.h>

#include "structbandit/rng.hpp"
#include "structbandit/structure.hpp"

using namespace structbandit;

static void BM_ProxL1(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  SplitMix64 rng(1);
  const Eigen::VectorXd v = gaussian_vector(p, rng);
  const auto model = StructureModel::l1(p, std::max(1, p / 8));
  for (auto _ : state) {
    auto out = model.prox(v, 0.3);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_ProxL1)->RangeMultiplier(4)->Range(16, 1024);

static void BM_ProxGroup(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  std::vector<std::vector<int>> groups;
  for (int start = 0; start < p; start += 4)
    groups.push_back({start, start + 1, start + 2, start + 3});
  const auto model = StructureModel::group_l12(p, std::move(groups), 1);
  SplitMix64 rng(2);
  const Eigen::VectorXd v = gaussian_vector(p, rng);
  for (auto _ : state) {
    auto out = model.prox(v, 0.3);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_ProxGroup)->RangeMultiplier(4)->Range(16, 1024);

static void BM_ProxNuclear(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto model = StructureModel::nuclear(d, d, 1);
  SplitMix64 rng(3);
  const Eigen::VectorXd v = gaussian_vector(d * d, rng);
  for (auto _ : state) {
    auto out = model.prox(v, 0.3);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_ProxNuclear)->RangeMultiplier(2)->Range(4, 64);

static void BM_DualNormNuclear(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto model = StructureModel::nuclear(d, d, 1);
  SplitMix64 rng(4);
  const Eigen::VectorXd v = gaussian_vector(d * d, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.dual_norm(v));
  }
}
BENCHMARK(BM_DualNormNuclear)->RangeMultiplier(2)->Range(4, 64);

BENCHMARK_MAIN();
