#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "structbandit/estimation.hpp"
#include "structbandit/rng.hpp"

using namespace structbandit;

namespace {

RegressionProblem make_problem(int t, int p, const StructureModel& model,
                               std::uint64_t seed) {
  SplitMix64 rng(seed);
  Eigen::MatrixXd X(t, p);
  for (int i = 0; i < t; ++i) X.row(i) = gaussian_vector(p, rng).transpose();
  Eigen::VectorXd y = gaussian_vector(t, rng);
  return {std::move(X), std::move(y), 0.05, model};
}

}  // namespace

static void BM_Fista(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto prob = make_problem(4 * p, p, StructureModel::l1(p, std::max(1, p / 8)), 7);
  for (auto _ : state) {
    auto est = solve_prox_grad(prob, {});
    benchmark::DoNotOptimize(est);
  }
}
BENCHMARK(BM_Fista)->RangeMultiplier(2)->Range(8, 128)->Unit(benchmark::kMicrosecond);

static void BM_FistaGramWarm(benchmark::State& state) {
  // warm-started gram path, the per-round cost inside an episode
  const int p = static_cast<int>(state.range(0));
  const auto model = StructureModel::l1(p, std::max(1, p / 8));
  const auto prob = make_problem(4 * p, p, model, 8);
  const Eigen::MatrixXd gram = prob.X.transpose() * prob.X;
  const Eigen::VectorXd xty = prob.X.transpose() * prob.y;
  const Estimate cold = solve_prox_grad_gram(gram, xty, prob.y.squaredNorm(),
                                             4 * p, prob.lambda, model, {});
  for (auto _ : state) {
    auto est = solve_prox_grad_gram(gram, xty, prob.y.squaredNorm(), 4 * p, prob.lambda,
                                    model, {}, &cold.theta_hat);
    benchmark::DoNotOptimize(est);
  }
}
BENCHMARK(BM_FistaGramWarm)->RangeMultiplier(2)->Range(8, 128)->Unit(benchmark::kMicrosecond);

static void BM_RidgeClosedForm(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto prob = make_problem(4 * p, p, StructureModel::l2(p), 9);
  for (auto _ : state) {
    auto est = solve_ridge_closed_form(prob);
    benchmark::DoNotOptimize(est);
  }
}
BENCHMARK(BM_RidgeClosedForm)->RangeMultiplier(2)->Range(8, 128)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
