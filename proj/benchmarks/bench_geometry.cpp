#include <benchmark/benchmark.h>

#include "structbandit/geometry.hpp"
#include "structbandit/rng.hpp"

using namespace structbandit;

static void BM_WidthL1Ball(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto model = StructureModel::l1(p, 1);
  for (auto _ : state) {
    auto est = estimate_omega_width(model, 10000, 1);
    benchmark::DoNotOptimize(est);
  }
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_WidthL1Ball)->RangeMultiplier(4)->Range(16, 256)->Unit(benchmark::kMillisecond);

static void BM_WidthL1BallThreaded(benchmark::State& state) {
  const auto model = StructureModel::l1(64, 1);
  for (auto _ : state) {
    auto est = estimate_omega_width(model, 100000, 1, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(est);
  }
}
BENCHMARK(BM_WidthL1BallThreaded)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_CapSample(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto model = StructureModel::l1(p, 2);
  SplitMix64 rng(5);
  Eigen::VectorXd theta_star = Eigen::VectorXd::Zero(p);
  theta_star[0] = theta_star[1] = 1.0 / std::sqrt(2.0);
  CapSampler sampler(ErrorSetSpec{model, theta_star});
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto u = sampler.sample(seed++);
    benchmark::DoNotOptimize(u);
  }
}
BENCHMARK(BM_CapSample)->RangeMultiplier(2)->Range(16, 128);

static void BM_RestrictedEigenvalue(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const int t = 10 * p;
  const auto model = StructureModel::l1(p, 2);
  SplitMix64 rng(6);
  Eigen::VectorXd theta_star = Eigen::VectorXd::Zero(p);
  theta_star[0] = theta_star[1] = 1.0 / std::sqrt(2.0);
  Eigen::MatrixXd X(t, p);
  for (int i = 0; i < t; ++i) X.row(i) = ball_uniform(p, rng).transpose();
  CapSampler sampler(ErrorSetSpec{model, theta_star});
  for (auto _ : state) {
    auto diag = estimate_restricted_eigenvalue(X, sampler, 50, 3);
    benchmark::DoNotOptimize(diag);
  }
}
BENCHMARK(BM_RestrictedEigenvalue)->RangeMultiplier(2)->Range(16, 64)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
