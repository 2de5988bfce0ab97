#include "structbandit/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace structbandit {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string noise_kind_to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::Uniform: return "uniform";
    case NoiseKind::Rademacher: return "rademacher";
    case NoiseKind::Zero: return "zero";
  }
  return "?";
}

}  // namespace

std::uint64_t content_hash(const nlohmann::json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

nlohmann::json ExperimentSpec::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["out"] = output_dir;
  nlohmann::json st;
  st["kind"] = structure_kind;
  if (structure_kind != "l2") st["s"] = structure_size;
  if (structure_kind == "group") st["group_size"] = group_size;
  if (structure_kind == "nuclear") st["rows"] = nuclear_rows;
  j["structure"] = st;
  if (!theta_kind.empty()) {
    nlohmann::json th;
    th["kind"] = theta_kind;
    if (theta_kind != "l2") th["s"] = theta_size;
    j["theta"] = th;
  }
  j["decision_set"] = set_kind;
  j["noise"] = {{"kind", noise_kind_to_string(noise_kind)}, {"B", noise_bound}};
  j["T_list"] = horizons;
  j["p_list"] = dims;
  j["seeds"] = seeds;
  j["schedule"] = {{"epsilon", schedule_template.epsilon},
                   {"gamma", schedule_template.gamma},
                   {"burnin_const", schedule_template.burnin_const},
                   {"lambda_const", schedule_template.lambda_const},
                   {"radius_const", schedule_template.radius_const},
                   {"arm_bound", schedule_template.arm_bound}};
  j["auto_widths"] = auto_widths;
  j["omega_width_samples"] = omega_width_samples;
  j["solver"] = {{"max_iters", solver.max_iters}, {"rel_tol", solver.rel_tol}};
  j["record_kappa"] = record_kappa;
  j["kappa_directions"] = kappa_directions;
  j["emit_svg"] = emit_svg;
  return j;
}

StructureModel instantiate_structure_impl(const std::string& kind, int size, int group_size,
                                          int nuclear_rows, int dim) {
  if (kind == "l2") return StructureModel::l2(dim);
  if (kind == "l1") return StructureModel::l1(dim, size);
  if (kind == "group") {
    if (group_size < 1 || dim % group_size != 0)
      throw InputError("group template: p=" + std::to_string(dim) +
                       " not divisible by group_size=" + std::to_string(group_size));
    std::vector<std::vector<int>> groups;
    for (int start = 0; start < dim; start += group_size) {
      std::vector<int> g(group_size);
      for (int i = 0; i < group_size; ++i) g[i] = start + i;
      groups.push_back(std::move(g));
    }
    return StructureModel::group_l12(dim, std::move(groups), size);
  }
  if (kind == "nuclear") {
    if (nuclear_rows < 1 || dim % nuclear_rows != 0)
      throw InputError("nuclear template: p=" + std::to_string(dim) +
                       " not divisible by rows=" + std::to_string(nuclear_rows));
    return StructureModel::nuclear(nuclear_rows, dim / nuclear_rows, size);
  }
  throw InputError("unknown structure kind '" + kind + "'");
}

StructureModel instantiate_structure(const ExperimentSpec& spec, int dim) {
  return instantiate_structure_impl(spec.structure_kind, spec.structure_size,
                                    spec.group_size, spec.nuclear_rows, dim);
}

StructureModel instantiate_theta_model(const ExperimentSpec& spec, int dim) {
  if (spec.theta_kind.empty()) return instantiate_structure(spec, dim);
  return instantiate_structure_impl(spec.theta_kind, spec.theta_size, spec.group_size,
                                    spec.nuclear_rows, dim);
}

DecisionSet instantiate_set(const ExperimentSpec& spec, int dim) {
  if (spec.set_kind == "ball") return DecisionSet::unit_ball(dim);
  if (spec.set_kind == "cube") return DecisionSet::hypercube(dim);
  throw InputError("sweep decision_set must be 'ball' or 'cube'");
}

ScheduleParams resolve_schedule(const ScheduleParams& tmpl, const StructureModel& model,
                                int horizon, bool auto_widths, int omega_width_samples) {
  ScheduleParams p = tmpl;
  p.horizon = horizon;
  if (auto_widths) {
    p.cap_width = default_cap_width(model);
    p.omega_width = estimate_omega_width(model, omega_width_samples).mean;
    p.psi = model.compat_constant();
    p.omega_diameter = model.omega_diameter();
  }
  return p;
}

// ---------------------------------------------------------------------------
// Sweep

namespace {

nlohmann::json cell_config_json(const ExperimentSpec& spec, int dim, int horizon,
                                std::uint64_t seed) {
  nlohmann::json j = spec.to_json();
  j.erase("T_list");
  j.erase("p_list");
  j.erase("seeds");
  j.erase("out");
  j.erase("emit_svg");
  j["p"] = dim;
  j["T"] = horizon;
  j["seed"] = seed;
  return j;
}

std::string cell_id(const ExperimentSpec& spec, int dim, int horizon, std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(
                    content_hash(cell_config_json(spec, dim, horizon, seed))));
  return spec.name + "_p" + std::to_string(dim) + "_T" + std::to_string(horizon) + "_s" +
         std::to_string(seed) + "_" + std::string(buf).substr(0, 8);
}

struct CellPlan {
  std::string id;
  int dim, horizon;
  std::uint64_t seed;
};

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    os << text;
  }
  fs::rename(tmp, path);
}

SweepCell run_cell(const ExperimentSpec& spec, const CellPlan& plan) {
  SweepCell cell;
  cell.id = plan.id;
  cell.dim = plan.dim;
  cell.horizon = plan.horizon;
  cell.seed = plan.seed;

  const fs::path traces = fs::path(spec.output_dir) / "traces";
  const fs::path trace_path = traces / (plan.id + ".csv");
  const fs::path meta_path = traces / (plan.id + ".meta.json");

  try {
    const StructureModel model = instantiate_structure(spec, plan.dim);
    const StructureModel theta_model = instantiate_theta_model(spec, plan.dim);
    const DecisionSet set = instantiate_set(spec, plan.dim);
    const ScheduleParams params = resolve_schedule(spec.schedule_template, model,
                                                   plan.horizon, spec.auto_widths,
                                                   spec.omega_width_samples);

    Environment env;
    env.theta_star = make_structured_theta(theta_model, derive_seed(plan.seed, 0x11e7a));
    env.noise_bound = spec.noise_bound;
    env.noise_kind = spec.noise_kind;

    EpisodeOptions options;
    options.record_kappa_at_burnin = spec.record_kappa;
    options.kappa_directions = spec.kappa_directions;

    const RegretTrace trace =
        run_episode(env, set, model, params, spec.solver, plan.seed, options);

    std::ostringstream csv;
    trace.write_csv(csv);
    write_text_atomic(trace_path, csv.str());

    nlohmann::json meta;
    meta["config"] = cell_config_json(spec, plan.dim, plan.horizon, plan.seed);
    meta["status"] = "done";
    meta["burnin"] = trace.burnin;
    meta["beta"] = trace.beta;
    meta["total_regret"] = trace.total_regret;
    meta["containment_rate"] = trace.containment_rate;
    meta["mean_lambda"] = trace.mean_lambda;
    meta["healthy"] = trace.healthy;
    meta["solver_failures"] = trace.solver_failures;
    if (trace.kappa_at_burnin) meta["kappa_at_burnin"] = *trace.kappa_at_burnin;
    write_text_atomic(meta_path, meta.dump(2) + "\n");

    cell.status = "done";
    cell.total_regret = trace.total_regret;
    cell.containment_rate = trace.containment_rate;
    cell.mean_lambda = trace.mean_lambda;
    cell.kappa_at_burnin = trace.kappa_at_burnin;
    cell.healthy = trace.healthy;
  } catch (const ScheduleInfeasibleError& e) {
    cell.status = "skipped";
    cell.reason = std::string("schedule_infeasible: min_feasible_T=") +
                  std::to_string(e.min_feasible_horizon);
    nlohmann::json meta;
    meta["config"] = cell_config_json(spec, plan.dim, plan.horizon, plan.seed);
    meta["status"] = "skipped";
    meta["reason"] = cell.reason;
    write_text_atomic(meta_path, meta.dump(2) + "\n");
  } catch (const InputError& e) {
    cell.status = "skipped";
    cell.reason = std::string("invalid_cell: ") + e.what();
    nlohmann::json meta;
    meta["config"] = cell_config_json(spec, plan.dim, plan.horizon, plan.seed);
    meta["status"] = "skipped";
    meta["reason"] = cell.reason;
    write_text_atomic(meta_path, meta.dump(2) + "\n");
  }
  return cell;
}

SweepCell load_cell(const ExperimentSpec& spec, const CellPlan& plan, bool mark_cached) {
  const fs::path traces = fs::path(spec.output_dir) / "traces";
  const fs::path meta_path = traces / (plan.id + ".meta.json");

  SweepCell cell;
  cell.id = plan.id;
  cell.dim = plan.dim;
  cell.horizon = plan.horizon;
  cell.seed = plan.seed;

  std::ifstream is(meta_path);
  const nlohmann::json meta = nlohmann::json::parse(is);
  const std::string status = meta.at("status").get<std::string>();
  if (status == "skipped") {
    cell.status = "skipped";
    cell.reason = meta.at("reason").get<std::string>();
    return cell;
  }

  // Metrics recomputed from the persisted trace; the sidecar only carries
  // what the trace rows cannot (burn-in length, kappa).
  const int burnin = meta.at("burnin").get<int>();
  std::ifstream ts(traces / (plan.id + ".csv"));
  const RegretTrace trace = RegretTrace::read_csv(ts);
  int contained = 0, optimistic = 0;
  double lambda_sum = 0.0;
  for (const auto& row : trace.rows) {
    if (row.round > burnin) {
      ++optimistic;
      if (row.contained) ++contained;
      lambda_sum += row.lambda;
    }
  }
  cell.status = mark_cached ? "cached" : "done";
  cell.total_regret = trace.total_regret;
  cell.containment_rate = optimistic > 0 ? static_cast<double>(contained) / optimistic : 0.0;
  cell.mean_lambda = optimistic > 0 ? lambda_sum / optimistic : 0.0;
  if (meta.contains("kappa_at_burnin"))
    cell.kappa_at_burnin = meta.at("kappa_at_burnin").get<double>();
  cell.healthy = meta.at("healthy").get<bool>();
  return cell;
}

std::vector<SweepAggregate> aggregate_cells(const ExperimentSpec& spec,
                                            const std::vector<SweepCell>& cells) {
  std::vector<SweepAggregate> aggs;
  for (int dim : spec.dims) {
    for (int horizon : spec.horizons) {
      SweepAggregate a;
      a.dim = dim;
      a.horizon = horizon;
      std::vector<double> regrets, kappas;
      double containment = 0.0;
      for (const auto& c : cells) {
        if (c.dim != dim || c.horizon != horizon || c.status == "skipped") continue;
        regrets.push_back(c.total_regret);
        containment += c.containment_rate;
        if (c.kappa_at_burnin) kappas.push_back(*c.kappa_at_burnin);
      }
      a.count = static_cast<int>(regrets.size());
      if (a.count > 0) {
        double mean = 0.0;
        for (double r : regrets) mean += r;
        mean /= a.count;
        double var = 0.0;
        for (double r : regrets) var += (r - mean) * (r - mean);
        a.mean_regret = mean;
        a.std_regret = a.count > 1 ? std::sqrt(var / (a.count - 1)) : 0.0;
        a.mean_containment = containment / a.count;
        if (!kappas.empty()) {
          double km = 0.0;
          for (double k : kappas) km += k;
          a.mean_kappa = km / static_cast<double>(kappas.size());
        }
      }
      aggs.push_back(std::move(a));
    }
  }
  return aggs;
}

void write_sweep_outputs(const ExperimentSpec& spec, const SweepResult& result) {
  const fs::path out(spec.output_dir);

  {
    std::ostringstream os;
    os << "id,p,T,seed,status,reason,total_regret,containment_rate,mean_lambda,"
          "kappa_at_burnin,healthy\n";
    for (const auto& c : result.cells) {
      os << c.id << ',' << c.dim << ',' << c.horizon << ',' << c.seed << ',' << c.status
         << ',' << '"' << c.reason << '"' << ',' << fmt(c.total_regret) << ','
         << fmt(c.containment_rate) << ',' << fmt(c.mean_lambda) << ','
         << (c.kappa_at_burnin ? fmt(*c.kappa_at_burnin) : std::string()) << ','
         << (c.healthy ? 1 : 0) << '\n';
    }
    write_text_atomic(out / "cells.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "p,T,count,mean_regret,std_regret,mean_containment,mean_kappa\n";
    for (const auto& a : result.aggregates) {
      os << a.dim << ',' << a.horizon << ',' << a.count << ',' << fmt(a.mean_regret) << ','
         << fmt(a.std_regret) << ',' << fmt(a.mean_containment) << ','
         << (a.mean_kappa ? fmt(*a.mean_kappa) : std::string()) << '\n';
    }
    write_text_atomic(out / "aggregate.csv", os.str());
  }

  // plot data: mean regret against horizon, one file per dimension
  fs::create_directories(out / "plots");
  for (int dim : spec.dims) {
    std::ostringstream os;
    SvgSeries series;
    series.label = "p=" + std::to_string(dim);
    for (const auto& a : result.aggregates) {
      if (a.dim != dim || a.count == 0) continue;
      os << a.horizon << ' ' << fmt(a.mean_regret) << '\n';
      series.points.emplace_back(a.horizon, a.mean_regret);
    }
    write_text_atomic(out / "plots" / ("regret_vs_T_p" + std::to_string(dim) + ".txt"),
                      os.str());
    if (spec.emit_svg && series.points.size() >= 2) {
      write_svg_chart(
          (out / "plots" / ("regret_vs_T_p" + std::to_string(dim) + ".svg")).string(),
          spec.name + ": mean regret vs horizon (p=" + std::to_string(dim) + ")", {series},
          true);
    }
  }
}

}  // namespace

bool SweepResult::operator==(const SweepResult& other) const {
  if (cells.size() != other.cells.size() || aggregates.size() != other.aggregates.size())
    return false;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& a = cells[i];
    const auto& b = other.cells[i];
    const bool base = a.id == b.id && a.dim == b.dim && a.horizon == b.horizon &&
                      a.seed == b.seed && a.reason == b.reason &&
                      a.total_regret == b.total_regret &&
                      a.containment_rate == b.containment_rate &&
                      a.mean_lambda == b.mean_lambda && a.healthy == b.healthy &&
                      a.kappa_at_burnin == b.kappa_at_burnin;
    if (!base) return false;  // status intentionally excluded: done vs cached
  }
  for (std::size_t i = 0; i < aggregates.size(); ++i) {
    const auto& a = aggregates[i];
    const auto& b = other.aggregates[i];
    if (!(a.dim == b.dim && a.horizon == b.horizon && a.count == b.count &&
          a.mean_regret == b.mean_regret && a.std_regret == b.std_regret &&
          a.mean_containment == b.mean_containment && a.mean_kappa == b.mean_kappa))
      return false;
  }
  return true;
}

SweepResult run_sweep(const ExperimentSpec& spec, int threads,
                      const std::atomic<bool>* cancel) {
  if (spec.horizons.empty() || spec.dims.empty() || spec.seeds.empty())
    throw InputError("run_sweep: grids and seed list must be non-empty");
  {
    auto sorted = spec.seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw InputError("run_sweep: seeds must be distinct");
  }

  const fs::path out(spec.output_dir);
  fs::create_directories(out / "traces");

  std::vector<CellPlan> plans;
  for (int dim : spec.dims)
    for (int horizon : spec.horizons)
      for (std::uint64_t seed : spec.seeds)
        plans.push_back({cell_id(spec, dim, horizon, seed), dim, horizon, seed});

  // manifest first, so partial runs stay attributable
  {
    nlohmann::json manifest;
    manifest["spec"] = spec.to_json();
    nlohmann::json cell_list = nlohmann::json::array();
    for (const auto& plan : plans) cell_list.push_back(plan.id);
    manifest["cells"] = cell_list;
    write_text_atomic(out / "manifest.json", manifest.dump(2) + "\n");
  }

  std::vector<SweepCell> cells(plans.size());
  std::atomic<std::size_t> next{0};
  threads = std::max(1, threads);

  auto worker = [&]() {
    for (;;) {
      if (cancel && cancel->load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= plans.size()) return;
      const CellPlan& plan = plans[i];
      const fs::path meta_path = out / "traces" / (plan.id + ".meta.json");
      if (fs::exists(meta_path)) {
        cells[i] = load_cell(spec, plan, /*mark_cached=*/true);
      } else {
        cells[i] = run_cell(spec, plan);
      }
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (cancel && cancel->load())
    throw std::runtime_error("run_sweep: cancelled");

  // deterministic post-pass from the persisted artifacts; keep the worker
  // statuses (done vs cached) which the recomputation cannot know
  SweepResult result = aggregate_sweep(spec);
  for (std::size_t i = 0; i < result.cells.size() && i < cells.size(); ++i)
    if (result.cells[i].id == cells[i].id) result.cells[i].status = cells[i].status;
  write_sweep_outputs(spec, result);
  return result;
}

SweepResult aggregate_sweep(const ExperimentSpec& spec) {
  SweepResult result;
  for (int dim : spec.dims) {
    for (int horizon : spec.horizons) {
      for (std::uint64_t seed : spec.seeds) {
        const CellPlan plan{cell_id(spec, dim, horizon, seed), dim, horizon, seed};
        const fs::path meta_path =
            fs::path(spec.output_dir) / "traces" / (plan.id + ".meta.json");
        if (!fs::exists(meta_path)) {
          SweepCell cell;
          cell.id = plan.id;
          cell.dim = dim;
          cell.horizon = horizon;
          cell.seed = seed;
          cell.status = "skipped";
          cell.reason = "missing_artifacts";
          result.cells.push_back(std::move(cell));
          continue;
        }
        result.cells.push_back(load_cell(spec, plan, /*mark_cached=*/false));
      }
    }
  }
  result.aggregates = aggregate_cells(spec, result.cells);
  return result;
}

// ---------------------------------------------------------------------------
// Diagnostics

ConcentrationTable concentration_diagnostic(const Environment& env, const DecisionSet& set,
                                            const StructureModel& model,
                                            const std::vector<int>& t_grid, int trials,
                                            std::uint64_t seed) {
  if (trials < 30) throw InputError("concentration_diagnostic: need at least 30 trials");
  if (t_grid.empty()) throw InputError("concentration_diagnostic: empty t grid");

  ConcentrationTable table;
  table.t_grid = t_grid;
  const int p = model.dim();
  if (set.dim() != p) throw InputError("concentration_diagnostic: set/model dim mismatch");

  for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
    const int t = t_grid[ti];
    if (t < 1) throw InputError("concentration_diagnostic: t must be positive");
    std::vector<double> stats(static_cast<std::size_t>(trials));
    for (int trial = 0; trial < trials; ++trial) {
      SplitMix64 rng(derive_seed(seed, 0xc0c0 + ti, static_cast<std::uint64_t>(trial)));
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(p);
      for (int i = 0; i < t; ++i) {
        const Eigen::VectorXd x = set.uniform_sample(rng);
        acc.noalias() += env.draw_noise(rng) * x;
      }
      stats[static_cast<std::size_t>(trial)] = model.dual_norm(acc / static_cast<double>(t));
    }
    const double mean = pairwise_sum(stats) / trials;
    double var = 0.0;
    for (double s : stats) var += (s - mean) * (s - mean);
    table.mean_stat.push_back(mean);
    table.std_stat.push_back(trials > 1 ? std::sqrt(var / (trials - 1)) : 0.0);
  }

  std::vector<double> t_as_double(t_grid.begin(), t_grid.end());
  table.loglog_slope = loglog_slope(t_as_double, table.mean_stat);
  return table;
}

REPhaseTable re_phase_diagnostic(const DecisionSet& set, const StructureModel& model,
                                 const Eigen::VectorXd& theta_star,
                                 const std::vector<int>& t_grid,
                                 const std::vector<std::uint64_t>& seeds, int directions) {
  if (t_grid.empty() || seeds.empty())
    throw InputError("re_phase_diagnostic: empty grid or seed list");
  std::vector<int> grid = t_grid;
  std::sort(grid.begin(), grid.end());

  REPhaseTable table;
  table.t_grid = grid;
  table.seeds = seeds;

  const CapSampler sampler(ErrorSetSpec{model, theta_star});
  const int t_max = grid.back();
  const int p = model.dim();

  for (std::uint64_t seed : seeds) {
    SplitMix64 arm_rng(derive_seed(seed, 0xa63));
    Eigen::MatrixXd X(t_max, p);
    for (int i = 0; i < t_max; ++i) X.row(i) = set.uniform_sample(arm_rng).transpose();

    std::vector<double> kappa_row;
    int first_positive = -1;
    for (int t : grid) {
      const REDiagnostic diag = estimate_restricted_eigenvalue(
          X.topRows(t), sampler, directions, derive_seed(seed, 0x4e0b));
      kappa_row.push_back(diag.kappa_hat);
      if (first_positive < 0 && diag.kappa_hat > 0.0) first_positive = t;
    }
    table.kappa.push_back(std::move(kappa_row));
    table.first_positive_t.push_back(first_positive);
  }
  return table;
}

ContainmentSummary containment_report(const std::vector<RegretTrace>& traces) {
  if (traces.empty()) throw InputError("containment_report: no traces");
  ContainmentSummary summary;
  long pooled_contained = 0, pooled_total = 0;
  std::map<int, std::pair<long, long>> per_round;  // round -> (contained, total)

  for (const auto& trace : traces) {
    long contained = 0, total = 0;
    for (const auto& row : trace.rows) {
      if (row.round <= trace.burnin) continue;
      ++total;
      if (row.contained) ++contained;
      auto& pr = per_round[row.round];
      ++pr.second;
      if (row.contained) ++pr.first;
    }
    summary.per_trace.push_back(total > 0 ? static_cast<double>(contained) / total : 0.0);
    pooled_contained += contained;
    pooled_total += total;
  }
  summary.pooled =
      pooled_total > 0 ? static_cast<double>(pooled_contained) / pooled_total : 0.0;

  for (const auto& [round, counts] : per_round) {
    const double frac = static_cast<double>(counts.first) / counts.second;
    if (frac < summary.worst_fraction) {
      summary.worst_fraction = frac;
      summary.worst_round = round;
    }
  }
  return summary;
}

std::optional<double> loglog_slope(const std::vector<double>& x,
                                   const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-12) return std::nullopt;
  return (n * sxy - sx * sy) / denom;
}

RegretSummary regret_summary(const std::vector<RegretTrace>& traces, RegretFit fit) {
  (void)fit;
  if (traces.empty()) throw InputError("regret_summary: no traces");

  std::map<int, std::vector<double>> by_horizon;
  for (const auto& trace : traces)
    by_horizon[static_cast<int>(trace.rows.size())].push_back(trace.total_regret);

  RegretSummary summary;
  for (const auto& [horizon, regrets] : by_horizon) {
    double mean = 0.0;
    for (double r : regrets) mean += r;
    mean /= static_cast<double>(regrets.size());
    double var = 0.0;
    for (double r : regrets) var += (r - mean) * (r - mean);
    summary.horizons.push_back(horizon);
    summary.mean_regret.push_back(mean);
    summary.std_regret.push_back(
        regrets.size() > 1 ? std::sqrt(var / (static_cast<double>(regrets.size()) - 1)) : 0.0);
    if (!(mean > 0.0)) summary.degenerate = true;
  }

  if (summary.horizons.size() >= 3 && !summary.degenerate) {
    std::vector<double> h(summary.horizons.begin(), summary.horizons.end());
    summary.loglog_slope = loglog_slope(h, summary.mean_regret);
    if (summary.loglog_slope) summary.sublinear = *summary.loglog_slope < 1.0;
  }
  return summary;
}

BootstrapDiff bootstrap_mean_diff(const std::vector<double>& x, const std::vector<double>& y,
                                  int resamples, std::uint64_t seed) {
  if (x.empty() || y.empty()) throw InputError("bootstrap_mean_diff: empty sample");
  if (resamples < 1) throw InputError("bootstrap_mean_diff: resamples must be positive");

  auto mean_of = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double e : v) m += e;
    return m / static_cast<double>(v.size());
  };

  BootstrapDiff out;
  out.observed = mean_of(x) - mean_of(y);
  out.resamples = resamples;

  std::vector<double> diffs(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    SplitMix64 rng(derive_seed(seed, 0xb007, static_cast<std::uint64_t>(b)));
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      mx += x[rng() % x.size()];
    for (std::size_t i = 0; i < y.size(); ++i)
      my += y[rng() % y.size()];
    diffs[static_cast<std::size_t>(b)] =
        mx / static_cast<double>(x.size()) - my / static_cast<double>(y.size());
  }
  std::sort(diffs.begin(), diffs.end());
  const std::size_t idx = static_cast<std::size_t>(
      std::floor(0.05 * static_cast<double>(resamples - 1)));
  out.lower95 = diffs[idx];
  return out;
}

// ---------------------------------------------------------------------------
// SVG

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::vector<SvgSeries>& series, bool log_log) {
  constexpr int W = 640, H = 420, ML = 70, MR = 20, MT = 40, MB = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  auto tx = [&](double v) { return log_log ? std::log10(std::max(v, 1e-300)) : v; };
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, tx(x));
      xmax = std::max(xmax, tx(x));
      ymin = std::min(ymin, tx(y));
      ymax = std::max(ymax, tx(y));
    }
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  auto px = [&](double x) { return ML + (tx(x) - xmin) / (xmax - xmin) * (W - ML - MR); };
  auto py = [&](double y) { return H - MB - (tx(y) - ymin) / (ymax - ymin) * (H - MT - MB); };

  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" "
        "font-family=\"sans-serif\">"
     << title << "</text>\n";
  os << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\""
     << H - MB << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << H - MB
     << "\" stroke=\"black\"/>\n";
  int color_idx = 0;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << colors[color_idx % 5]
       << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : s.points) os << px(x) << ',' << py(y) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << W - MR - 5 << "\" y=\"" << MT + 16 * (color_idx + 1)
       << "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\" fill=\""
       << colors[color_idx % 5] << "\">" << s.label << "</text>\n";
    ++color_idx;
  }
  os << "</svg>\n";
  std::ofstream f(path, std::ios::binary);
  f << os.str();
}

}  // namespace structbandit
