#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "structbandit/experiments.hpp"

using namespace structbandit;
namespace fs = std::filesystem;
using Eigen::VectorXd;

namespace {

ExperimentSpec tiny_spec(const std::string& out) {
  ExperimentSpec spec;
  spec.name = "tiny";
  spec.output_dir = out;
  spec.structure_kind = "l1";
  spec.structure_size = 1;
  spec.set_kind = "ball";
  spec.noise_bound = 0.1;
  spec.horizons = {300};
  spec.dims = {6};
  spec.seeds = {1, 2, 3};
  spec.schedule_template.lambda_const = 0.05;
  spec.omega_width_samples = 5000;
  spec.kappa_directions = 10;
  spec.emit_svg = false;
  return spec;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("structbandit_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("sweep bookkeeping: one config, three seeds") {
  const fs::path dir = fresh_dir("bookkeeping");
  const ExperimentSpec spec = tiny_spec(dir.string());
  const SweepResult result = run_sweep(spec, 2);

  CHECK(result.cells.size() == 3);
  for (const auto& cell : result.cells) CHECK(cell.status == "done");
  REQUIRE(result.aggregates.size() == 1);
  CHECK(result.aggregates[0].count == 3);

  int csvs = 0, metas = 0;
  for (const auto& entry : fs::directory_iterator(dir / "traces")) {
    if (entry.path().extension() == ".csv") ++csvs;
    if (entry.path().string().ends_with(".meta.json")) ++metas;
  }
  CHECK(csvs == 3);
  CHECK(metas == 3);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(fs::exists(dir / "aggregate.csv"));
  CHECK(fs::exists(dir / "cells.csv"));
  CHECK(fs::exists(dir / "plots" / "regret_vs_T_p6.txt"));
}

TEST_CASE("identical sweep re-runs hit the cache and reproduce aggregates") {
  const fs::path dir = fresh_dir("cache");
  const ExperimentSpec spec = tiny_spec(dir.string());
  const SweepResult first = run_sweep(spec, 1);

  // capture one trace file to confirm the re-run does not rewrite it
  fs::path one_trace;
  for (const auto& entry : fs::directory_iterator(dir / "traces"))
    if (entry.path().extension() == ".csv") one_trace = entry.path();
  const auto mtime = fs::last_write_time(one_trace);

  const SweepResult second = run_sweep(spec, 2);
  for (const auto& cell : second.cells) CHECK(cell.status == "cached");
  CHECK(first == second);
  CHECK(fs::last_write_time(one_trace) == mtime);

  // the aggregation post-pass alone reproduces the result exactly
  const SweepResult recomputed = aggregate_sweep(spec);
  CHECK(first == recomputed);
}

TEST_CASE("sweeps are deterministic across output directories") {
  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  ExperimentSpec sa = tiny_spec(a.string());
  ExperimentSpec sb = tiny_spec(b.string());
  run_sweep(sa, 2);
  run_sweep(sb, 1);
  for (const auto& entry : fs::directory_iterator(a / "traces")) {
    if (entry.path().extension() != ".csv") continue;
    const fs::path other = b / "traces" / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(slurp(entry.path()) == slurp(other));
  }
  CHECK(slurp(a / "aggregate.csv") == slurp(b / "aggregate.csv"));
}

TEST_CASE("infeasible cells are skipped with a machine-readable reason") {
  const fs::path dir = fresh_dir("skip");
  ExperimentSpec spec = tiny_spec(dir.string());
  spec.horizons = {10, 300};  // 10 is below the burn-in requirement
  spec.seeds = {1};
  const SweepResult result = run_sweep(spec, 1);
  REQUIRE(result.cells.size() == 2);
  int skipped = 0, done = 0;
  for (const auto& cell : result.cells) {
    if (cell.status == "skipped") {
      ++skipped;
      CHECK(cell.reason.find("schedule_infeasible") != std::string::npos);
      CHECK(cell.reason.find("min_feasible_T=") != std::string::npos);
    } else {
      ++done;
    }
  }
  CHECK(skipped == 1);
  CHECK(done == 1);
}

TEST_CASE("group and nuclear templates that do not divide p are skipped") {
  const fs::path dir = fresh_dir("divisibility");
  ExperimentSpec spec = tiny_spec(dir.string());
  spec.structure_kind = "group";
  spec.structure_size = 1;
  spec.group_size = 4;
  spec.dims = {6};  // 6 % 4 != 0
  spec.seeds = {1};
  const SweepResult result = run_sweep(spec, 1);
  REQUIRE(result.cells.size() == 1);
  CHECK(result.cells[0].status == "skipped");
  CHECK(result.cells[0].reason.find("invalid_cell") != std::string::npos);
}

TEST_CASE("concentration diagnostic") {
  const auto model = StructureModel::l1(8, 1);
  const auto set = DecisionSet::unit_ball(8);
  Environment env;
  env.theta_star = VectorXd::Zero(8);

  SUBCASE("zero noise gives exactly zero") {
    env.noise_kind = NoiseKind::Zero;
    env.noise_bound = 0.0;
    const auto table = concentration_diagnostic(env, set, model, {8, 32}, 40, 1);
    for (double m : table.mean_stat) CHECK(m == 0.0);
    CHECK_FALSE(table.loglog_slope.has_value());
  }

  SUBCASE("statistic is close to linear in the noise bound") {
    env.noise_kind = NoiseKind::Uniform;
    env.noise_bound = 0.1;
    const auto small = concentration_diagnostic(env, set, model, {64}, 200, 7);
    env.noise_bound = 0.2;
    const auto big = concentration_diagnostic(env, set, model, {64}, 200, 7);
    CHECK(big.mean_stat[0] / small.mean_stat[0] == doctest::Approx(2.0).epsilon(0.1));
  }

  SUBCASE("decay rate is near one over square root of t") {
    env.noise_kind = NoiseKind::Uniform;
    env.noise_bound = 0.2;
    const auto table = concentration_diagnostic(env, set, model, {32, 128, 512}, 60, 3);
    REQUIRE(table.loglog_slope.has_value());
    CHECK(*table.loglog_slope > -0.7);
    CHECK(*table.loglog_slope < -0.3);
  }

  SUBCASE("trial floor is enforced") {
    CHECK_THROWS_AS(concentration_diagnostic(env, set, model, {8}, 10, 1), InputError);
  }
}

TEST_CASE("restricted eigenvalue phase diagnostic") {
  const int p = 16;
  const auto model = StructureModel::l1(p, 2);
  const auto set = DecisionSet::unit_ball(p);
  VectorXd theta_star = VectorXd::Zero(p);
  theta_star[0] = theta_star[3] = 1.0 / std::sqrt(2.0);

  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const std::vector<int> grid = {2, 50, 16 * 50};

  const auto table = re_phase_diagnostic(set, model, theta_star, grid, seeds, 50);
  REQUIRE(table.kappa.size() == seeds.size());

  // concentration: the long-design kappa exceeds the two-row kappa
  int improved = 0;
  for (std::size_t s = 0; s < seeds.size(); ++s)
    if (table.kappa[s][2] > table.kappa[s][0]) ++improved;
  CHECK(improved >= 9);

  // more directions can only lower kappa, so the crossing cannot come earlier
  const auto more = re_phase_diagnostic(set, model, theta_star, grid, seeds, 200);
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    for (std::size_t ti = 0; ti < grid.size(); ++ti)
      CHECK(more.kappa[s][ti] <= table.kappa[s][ti] + 1e-15);
    if (table.first_positive_t[s] >= 0 && more.first_positive_t[s] >= 0)
      CHECK(more.first_positive_t[s] >= table.first_positive_t[s]);
  }
}

TEST_CASE("containment report") {
  RegretTrace all_true;
  all_true.burnin = 2;
  for (int t = 1; t <= 10; ++t)
    all_true.rows.push_back({t, 0.0, 0.0, 0.0, t > 2, 0});
  const auto summary = containment_report({all_true});
  CHECK(summary.pooled == doctest::Approx(1.0));
  CHECK(summary.per_trace[0] == doctest::Approx(1.0));

  RegretTrace half = all_true;
  for (auto& row : half.rows)
    if (row.round > 6) row.contained = false;
  const auto mixed = containment_report({all_true, half});
  CHECK(mixed.pooled == doctest::Approx((8.0 + 4.0) / 16.0));
  CHECK(mixed.worst_round > 6);
  CHECK(mixed.worst_fraction == doctest::Approx(0.5));

  CHECK_THROWS_AS(containment_report({}), InputError);
}

TEST_CASE("a point ellipsoid under noise almost never contains theta_star") {
  const auto model = StructureModel::l1(6, 1);
  Environment env;
  env.theta_star = make_structured_theta(model, 3);
  env.noise_bound = 0.2;
  env.noise_kind = NoiseKind::Uniform;
  ScheduleParams params;
  params.horizon = 300;
  params.cap_width = default_cap_width(model);
  params.omega_width = default_omega_width(model);
  params.psi = model.compat_constant();
  params.lambda_const = 0.05;
  params.radius_const = 0.0;  // beta = 0
  const RegretTrace trace =
      run_episode(env, DecisionSet::unit_ball(6), model, params, {}, 1);
  CHECK(containment_report({trace}).pooled < 0.05);
}

TEST_CASE("regret summary and slope fits") {
  auto synthetic = [](int T, double total) {
    RegretTrace trace;
    trace.burnin = 1;
    double cum = 0.0;
    for (int t = 1; t <= T; ++t) {
      const double r = total / T;
      cum += r;
      trace.rows.push_back({t, r, cum, 0.0, true, 0});
    }
    trace.total_regret = total;
    return trace;
  };

  SUBCASE("oracle play is degenerate, slope omitted") {
    const auto summary =
        regret_summary({synthetic(100, 0.0), synthetic(200, 0.0), synthetic(400, 0.0)});
    CHECK(summary.degenerate);
    CHECK_FALSE(summary.loglog_slope.has_value());
  }

  SUBCASE("slightly superlinear regret is not flagged sublinear") {
    const auto summary = regret_summary(
        {synthetic(100, 50.0), synthetic(200, 104.0), synthetic(400, 216.0)});
    REQUIRE(summary.loglog_slope.has_value());
    CHECK(*summary.loglog_slope == doctest::Approx(1.055).epsilon(0.01));
    CHECK_FALSE(summary.sublinear);
  }

  SUBCASE("square root regret fits slope one half") {
    const auto summary = regret_summary({synthetic(100, 10.0), synthetic(400, 20.0),
                                         synthetic(1600, 40.0)});
    REQUIRE(summary.loglog_slope.has_value());
    CHECK(*summary.loglog_slope == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(summary.sublinear);
  }

  SUBCASE("fewer than three horizons gives no slope") {
    const auto summary = regret_summary({synthetic(100, 10.0), synthetic(200, 20.0)});
    CHECK_FALSE(summary.loglog_slope.has_value());
  }
}

TEST_CASE("bootstrap mean difference") {
  const std::vector<double> low = {1.0, 1.2, 0.9, 1.1, 1.05, 0.95};
  const std::vector<double> high = {2.0, 2.2, 1.9, 2.1, 2.05, 1.95};
  const auto diff = bootstrap_mean_diff(high, low, 10000, 5);
  CHECK(diff.observed == doctest::Approx(1.0).epsilon(0.05));
  CHECK(diff.lower95 > 0.0);

  const auto same = bootstrap_mean_diff(low, low, 10000, 5);
  CHECK(same.lower95 <= 0.0);

  // deterministic per seed
  const auto again = bootstrap_mean_diff(high, low, 10000, 5);
  CHECK(again.lower95 == diff.lower95);
}

TEST_CASE("loglog slope edge cases") {
  CHECK_FALSE(loglog_slope({1.0, 2.0}, {0.0, 1.0}).has_value());
  CHECK_FALSE(loglog_slope({1.0}, {1.0}).has_value());
  const auto s = loglog_slope({1.0, 10.0, 100.0}, {2.0, 20.0, 200.0});
  REQUIRE(s.has_value());
  CHECK(*s == doctest::Approx(1.0));
}

TEST_CASE("content hash distinguishes configs") {
  const nlohmann::json a = {{"p", 8}, {"T", 100}};
  nlohmann::json b = a;
  b["T"] = 101;
  CHECK(content_hash(a) == content_hash(a));
  CHECK(content_hash(a) != content_hash(b));
}

TEST_CASE("svg chart writer emits a well-formed file") {
  const fs::path dir = fresh_dir("svg");
  SvgSeries series;
  series.label = "demo";
  series.points = {{1.0, 2.0}, {2.0, 3.0}, {4.0, 5.0}};
  const std::string path = (dir / "chart.svg").string();
  write_svg_chart(path, "demo chart", {series}, true);
  const std::string body = slurp(path);
  CHECK(body.find("<svg") != std::string::npos);
  CHECK(body.find("polyline") != std::string::npos);
  CHECK(body.find("demo") != std::string::npos);
}

TEST_CASE("sweep spec json round trip") {
  ExperimentSpec spec = tiny_spec("somewhere");
  spec.theta_kind = "l1";
  spec.theta_size = 1;
  const ExperimentSpec back = ExperimentSpec::from_json(spec.to_json());
  CHECK(back.name == spec.name);
  CHECK(back.structure_kind == spec.structure_kind);
  CHECK(back.horizons == spec.horizons);
  CHECK(back.dims == spec.dims);
  CHECK(back.seeds == spec.seeds);
  CHECK(back.theta_kind == "l1");
  CHECK(back.schedule_template.lambda_const ==
        doctest::Approx(spec.schedule_template.lambda_const));
}

TEST_CASE("uniform-random play has linear regret in the horizon") {
  // stretch the burn-in to T-2 so the episode is uniform sampling throughout
  const auto model = StructureModel::l1(8, 1);
  const auto set = DecisionSet::unit_ball(8);
  std::vector<RegretTrace> traces;
  for (int horizon : {200, 400, 800}) {
    ScheduleParams params;
    params.horizon = horizon;
    params.cap_width = 1.0;
    params.burnin_const = (horizon - 2.0) / (1.0 + std::log(double(horizon)));
    params.omega_width = default_omega_width(model);
    params.psi = model.compat_constant();
    params.lambda_const = 0.05;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Environment env;
      env.theta_star = make_structured_theta(model, derive_seed(seed, 0x11e7a));
      env.noise_bound = 0.1;
      env.noise_kind = NoiseKind::Uniform;
      traces.push_back(run_episode(env, set, model, params, {}, seed));
    }
  }
  const auto summary = regret_summary(traces);
  REQUIRE(summary.loglog_slope.has_value());
  CHECK(*summary.loglog_slope > 0.9);
  CHECK(*summary.loglog_slope < 1.1);
  CHECK_FALSE(summary.sublinear);
}
