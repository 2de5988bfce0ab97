#include <benchmark/benchmark.h>

#include "structbandit/bandit.hpp"
#include "structbandit/geometry.hpp"

using namespace structbandit;

static void BM_Episode(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const int horizon = static_cast<int>(state.range(1));
  const auto model = StructureModel::l1(p, 2);
  const auto set = DecisionSet::unit_ball(p);

  ScheduleParams params;
  params.horizon = horizon;
  params.lambda_const = 0.04;
  params.radius_const = 0.5;
  params.cap_width = default_cap_width(model);
  params.omega_width = default_omega_width(model);
  params.psi = model.compat_constant();

  Environment env;
  env.theta_star = make_structured_theta(model, 1);
  env.noise_bound = 0.1;
  env.noise_kind = NoiseKind::Uniform;

  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto trace = run_episode(env, set, model, params, {}, seed++);
    benchmark::DoNotOptimize(trace);
  }
  state.SetItemsProcessed(state.iterations() * horizon);
}
BENCHMARK(BM_Episode)
    ->Args({8, 500})
    ->Args({32, 1000})
    ->Args({64, 1000})
    ->Unit(benchmark::kMillisecond);

static void BM_EpisodeRidge(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto model = StructureModel::l2(p);
  const auto set = DecisionSet::unit_ball(p);

  ScheduleParams params;
  params.horizon = 1000;
  params.lambda_const = 0.04;
  params.radius_const = 0.5;
  params.cap_width = default_cap_width(model);
  params.omega_width = default_omega_width(model);
  params.psi = model.compat_constant();

  Environment env;
  env.theta_star = make_structured_theta(model, 2);
  env.noise_bound = 0.1;
  env.noise_kind = NoiseKind::Uniform;

  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto trace = run_episode(env, set, model, params, {}, seed++);
    benchmark::DoNotOptimize(trace);
  }
}
BENCHMARK(BM_EpisodeRidge)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
