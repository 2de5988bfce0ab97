// structbandit: simulator and diagnostics for norm-structured stochastic
// linear bandits. Subcommands: run, sweep, width, diagnose-lambda,
// diagnose-re, report.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "structbandit/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> g_cancel{false};

void sigint_handler(int) { g_cancel.store(true); }

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;  // -1: no override
  int threads = 0;      // 0: resolve from env / hardware
  bool quiet = false;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* opt = cmd->add_option("--config", args.config_path, "Path to a JSON config file");
  if (config_required) opt->required();
  cmd->add_option("--out", args.out_dir, "Output directory (overrides config)");
  cmd->add_option("--seed", args.seed, "Seed override (flag > config > default)");
  cmd->add_option("--threads", args.threads,
                  "Worker threads (default: STRUCTBANDIT_THREADS or hardware)");
  cmd->add_flag("--quiet", args.quiet, "Suppress progress output");
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("STRUCTBANDIT_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw structbandit::ConfigParseError("cannot open config file '" + path + "'");
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw structbandit::ConfigParseError("config parse error in '" + path +
                                         "': " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  os << text;
}

void write_error_record(const std::string& out_dir, const std::string& message, int code) {
  if (out_dir.empty()) return;
  try {
    json err;
    err["error"] = message;
    err["exit_code"] = code;
    write_file(fs::path(out_dir) / "error.json", err.dump(2) + "\n");
  } catch (...) {
    // stderr still carries the message
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// -----------------------------------------------------------------------
// run

int cmd_run(const CommonArgs& args) {
  json cfg_json = load_json(args.config_path);
  if (args.seed >= 0) cfg_json["seed"] = static_cast<std::uint64_t>(args.seed);
  structbandit::EpisodeConfig cfg = structbandit::parse_episode_config(cfg_json);

  const std::string out = args.out_dir.empty() ? "out" : args.out_dir;
  fs::create_directories(fs::path(out) / "traces");

  const structbandit::Schedule schedule = structbandit::compute_schedule(cfg.schedule);

  json manifest;
  manifest["command"] = "run";
  manifest["config"] = cfg.to_json();
  manifest["seed"] = cfg.seed;
  manifest["schedule"] = {{"n", schedule.burnin}, {"beta", schedule.beta}};
  write_file(fs::path(out) / "manifest.json", manifest.dump(2) + "\n");

  const structbandit::RegretTrace trace = structbandit::run_episode(
      cfg.env, cfg.set, cfg.model, cfg.schedule, cfg.solver, cfg.seed, cfg.options);

  const std::string stem = "episode_seed" + std::to_string(cfg.seed);
  {
    std::ostringstream csv;
    trace.write_csv(csv);
    write_file(fs::path(out) / "traces" / (stem + ".csv"), csv.str());
  }
  {
    json meta;
    meta["status"] = "done";
    meta["burnin"] = trace.burnin;
    meta["beta"] = trace.beta;
    meta["total_regret"] = trace.total_regret;
    meta["containment_rate"] = trace.containment_rate;
    meta["mean_lambda"] = trace.mean_lambda;
    meta["healthy"] = trace.healthy;
    meta["solver_failures"] = trace.solver_failures;
    if (trace.kappa_at_burnin) meta["kappa_at_burnin"] = *trace.kappa_at_burnin;
    write_file(fs::path(out) / "traces" / (stem + ".meta.json"), meta.dump(2) + "\n");
  }

  if (!args.quiet) {
    std::cout << "episode: T=" << cfg.schedule.horizon << " n=" << trace.burnin
              << " beta=" << fmt(trace.beta)
              << " containment=" << fmt(trace.containment_rate)
              << (trace.healthy ? "" : " UNHEALTHY") << "\n";
  }
  std::cout << "R_T = " << fmt(trace.total_regret) << "\n";
  return 0;
}

// -----------------------------------------------------------------------
// sweep

int cmd_sweep(const CommonArgs& args) {
  json cfg_json = load_json(args.config_path);
  if (!args.out_dir.empty()) cfg_json["out"] = args.out_dir;
  structbandit::ExperimentSpec spec = structbandit::parse_sweep_config(cfg_json);

  const int threads = resolve_threads(args.threads);
  if (!args.quiet)
    std::cout << "sweep '" << spec.name << "': " << spec.dims.size() << " dims x "
              << spec.horizons.size() << " horizons x " << spec.seeds.size() << " seeds, "
              << threads << " threads\n";

  const structbandit::SweepResult result = structbandit::run_sweep(spec, threads, &g_cancel);

  int done = 0, cached = 0, skipped = 0;
  for (const auto& cell : result.cells) {
    if (cell.status == "done") ++done;
    if (cell.status == "cached") ++cached;
    if (cell.status == "skipped") ++skipped;
  }
  if (!args.quiet) {
    std::cout << "cells: " << done << " run, " << cached << " cached, " << skipped
              << " skipped\n";
    for (const auto& agg : result.aggregates) {
      if (agg.count == 0) continue;
      std::cout << "p=" << agg.dim << " T=" << agg.horizon << " n=" << agg.count
                << " mean_R_T=" << fmt(agg.mean_regret) << " (sd " << fmt(agg.std_regret)
                << ") containment=" << fmt(agg.mean_containment) << "\n";
    }
  }
  std::cout << "aggregate: " << (fs::path(spec.output_dir) / "aggregate.csv").string()
            << "\n";
  return 0;
}

// -----------------------------------------------------------------------
// width

int cmd_width(const CommonArgs& args, const std::string& set_name, int p, int samples) {
  structbandit::WidthRequest req;
  if (!args.config_path.empty()) {
    json cfg_json = load_json(args.config_path);
    if (args.seed >= 0) cfg_json["seed"] = static_cast<std::uint64_t>(args.seed);
    req = structbandit::parse_width_config(cfg_json);
  } else {
    if (set_name.empty() || p <= 0)
      throw structbandit::ConfigParseError("width: need --config or both --set and --p");
    req.model = structbandit::width_set_from_name(set_name, p);
    req.samples = samples;
    if (args.seed >= 0) req.seed = static_cast<std::uint64_t>(args.seed);
  }

  const int threads = resolve_threads(args.threads);
  const structbandit::WidthEstimate est =
      structbandit::estimate_omega_width(req.model, req.samples, req.seed, threads);

  std::cout << "width " << structbandit::to_string(req.model.kind())
            << "-ball p=" << req.model.dim() << " mean=" << fmt(est.mean)
            << " std_error=" << fmt(est.std_error) << " samples=" << est.samples << "\n";

  if (!args.out_dir.empty()) {
    json record = est.to_json();
    record["model"] = req.model.to_json();
    record["seed"] = req.seed;
    write_file(fs::path(args.out_dir) / "width.json", record.dump(2) + "\n");
  }
  return 0;
}

// -----------------------------------------------------------------------
// diagnose-lambda

int cmd_diagnose_lambda(const CommonArgs& args) {
  json cfg_json = load_json(args.config_path);
  if (args.seed >= 0) cfg_json["seed"] = static_cast<std::uint64_t>(args.seed);
  const structbandit::LambdaDiagnosticConfig cfg =
      structbandit::parse_lambda_diagnostic_config(cfg_json);

  const structbandit::ConcentrationTable table = structbandit::concentration_diagnostic(
      cfg.env, cfg.set, cfg.model, cfg.t_grid, cfg.trials, cfg.seed);

  std::ostringstream csv;
  csv << "t,mean_dual_norm,std_dual_norm\n";
  for (std::size_t i = 0; i < table.t_grid.size(); ++i) {
    csv << table.t_grid[i] << ',' << fmt(table.mean_stat[i]) << ','
        << fmt(table.std_stat[i]) << '\n';
    if (!args.quiet)
      std::cout << "t=" << table.t_grid[i] << " mean=" << fmt(table.mean_stat[i])
                << " sd=" << fmt(table.std_stat[i]) << "\n";
  }
  if (table.loglog_slope)
    std::cout << "loglog_slope = " << fmt(*table.loglog_slope) << "\n";
  else
    std::cout << "loglog_slope = undefined (zero statistic)\n";

  if (!args.out_dir.empty()) {
    write_file(fs::path(args.out_dir) / "lambda_diagnostic.csv", csv.str());
    json manifest;
    manifest["command"] = "diagnose-lambda";
    manifest["config"] = cfg_json;
    if (table.loglog_slope) manifest["loglog_slope"] = *table.loglog_slope;
    write_file(fs::path(args.out_dir) / "manifest.json", manifest.dump(2) + "\n");
  }
  return 0;
}

// -----------------------------------------------------------------------
// diagnose-re

int cmd_diagnose_re(const CommonArgs& args) {
  json cfg_json = load_json(args.config_path);
  const structbandit::REDiagnosticConfig cfg =
      structbandit::parse_re_diagnostic_config(cfg_json);

  const structbandit::REPhaseTable table = structbandit::re_phase_diagnostic(
      cfg.set, cfg.model, cfg.theta_star, cfg.t_grid, cfg.seeds, cfg.directions);

  std::ostringstream csv;
  csv << "seed,t,kappa_hat\n";
  for (std::size_t si = 0; si < table.seeds.size(); ++si) {
    for (std::size_t ti = 0; ti < table.t_grid.size(); ++ti)
      csv << table.seeds[si] << ',' << table.t_grid[ti] << ','
          << fmt(table.kappa[si][ti]) << '\n';
    if (!args.quiet)
      std::cout << "seed=" << table.seeds[si]
                << " first_positive_t=" << table.first_positive_t[si] << "\n";
  }

  int positive = 0;
  for (int t : table.first_positive_t)
    if (t >= 0) ++positive;
  std::cout << "seeds with positive kappa: " << positive << "/" << table.seeds.size()
            << "\n";

  if (!args.out_dir.empty()) {
    write_file(fs::path(args.out_dir) / "re_diagnostic.csv", csv.str());
    json manifest;
    manifest["command"] = "diagnose-re";
    manifest["config"] = cfg_json;
    manifest["first_positive_t"] = table.first_positive_t;
    write_file(fs::path(args.out_dir) / "manifest.json", manifest.dump(2) + "\n");
  }
  return 0;
}

// -----------------------------------------------------------------------
// report

int cmd_report(const CommonArgs& args) {
  const std::string out = args.out_dir.empty() ? "out" : args.out_dir;
  const fs::path traces_dir = fs::path(out) / "traces";
  if (!fs::exists(traces_dir))
    throw structbandit::ConfigParseError("report: no traces directory under '" + out + "'");

  std::vector<structbandit::RegretTrace> traces;
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(traces_dir)) {
    if (entry.path().extension() != ".csv") continue;
    const fs::path meta_path = entry.path().string().substr(
                                   0, entry.path().string().size() - 4) +
                               ".meta.json";
    std::ifstream ts(entry.path());
    structbandit::RegretTrace trace = structbandit::RegretTrace::read_csv(ts);
    if (fs::exists(meta_path)) {
      std::ifstream ms(meta_path);
      const json meta = json::parse(ms);
      if (meta.value("status", "done") == "skipped") continue;
      trace.burnin = meta.value("burnin", 0);
      trace.beta = meta.value("beta", 0.0);
    }
    names.push_back(entry.path().filename().string());
    traces.push_back(std::move(trace));
  }
  if (traces.empty())
    throw structbandit::ConfigParseError("report: no trace files under '" + out + "'");

  const structbandit::ContainmentSummary containment =
      structbandit::containment_report(traces);
  const structbandit::RegretSummary regret = structbandit::regret_summary(traces);

  std::cout << "traces: " << traces.size() << "\n";
  std::cout << "pooled containment: " << fmt(containment.pooled) << " (worst round "
            << containment.worst_round << " at " << fmt(containment.worst_fraction)
            << ")\n";
  for (std::size_t i = 0; i < regret.horizons.size(); ++i)
    std::cout << "T=" << regret.horizons[i] << " mean_R_T=" << fmt(regret.mean_regret[i])
              << " (sd " << fmt(regret.std_regret[i]) << ")\n";
  if (regret.loglog_slope)
    std::cout << "loglog_slope = " << fmt(*regret.loglog_slope)
              << (regret.sublinear ? " (sublinear)" : " (NOT sublinear)") << "\n";

  json report;
  report["traces"] = names;
  report["pooled_containment"] = containment.pooled;
  report["per_trace_containment"] = containment.per_trace;
  report["worst_round"] = containment.worst_round;
  report["horizons"] = regret.horizons;
  report["mean_regret"] = regret.mean_regret;
  if (regret.loglog_slope) {
    report["loglog_slope"] = *regret.loglog_slope;
    report["sublinear"] = regret.sublinear;
  }
  write_file(fs::path(out) / "report.json", report.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, sigint_handler);

  CLI::App app{"structured stochastic linear bandit simulator"};
  app.require_subcommand(1);

  CommonArgs run_args, sweep_args, width_args, lambda_args, re_args, report_args;
  std::string width_set;
  int width_p = 0;
  int width_samples = 100000;

  auto* run_cmd = app.add_subcommand("run", "Run a single episode from a config file");
  add_common_flags(run_cmd, run_args);

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a multi-seed experiment grid");
  add_common_flags(sweep_cmd, sweep_args);

  auto* width_cmd =
      app.add_subcommand("width", "Monte-Carlo Gaussian width of a unit norm ball");
  add_common_flags(width_cmd, width_args, /*config_required=*/false);
  width_cmd->add_option("--set", width_set,
                        "Ball name: l1-ball, l2-ball, group-ball, nuclear-ball");
  width_cmd->add_option("--p", width_p, "Ambient dimension");
  width_cmd->add_option("--samples", width_samples, "Monte-Carlo samples (default 100000)");

  auto* lambda_cmd = app.add_subcommand(
      "diagnose-lambda", "Dual-norm noise concentration against the round count");
  add_common_flags(lambda_cmd, lambda_args);

  auto* re_cmd = app.add_subcommand(
      "diagnose-re", "Restricted-eigenvalue positivity along a growing design");
  add_common_flags(re_cmd, re_args);

  auto* report_cmd =
      app.add_subcommand("report", "Summarize traces in an output directory");
  add_common_flags(report_cmd, report_args, /*config_required=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // every command-line error is an input error
  }

  std::string active_out;
  try {
    if (run_cmd->parsed()) {
      active_out = run_args.out_dir.empty() ? "out" : run_args.out_dir;
      return cmd_run(run_args);
    }
    if (sweep_cmd->parsed()) {
      active_out = sweep_args.out_dir;
      const int rc = cmd_sweep(sweep_args);
      return rc;
    }
    if (width_cmd->parsed()) {
      active_out = width_args.out_dir;
      return cmd_width(width_args, width_set, width_p, width_samples);
    }
    if (lambda_cmd->parsed()) {
      active_out = lambda_args.out_dir;
      return cmd_diagnose_lambda(lambda_args);
    }
    if (re_cmd->parsed()) {
      active_out = re_args.out_dir;
      return cmd_diagnose_re(re_args);
    }
    if (report_cmd->parsed()) {
      active_out = report_args.out_dir;
      return cmd_report(report_args);
    }
  } catch (const structbandit::ConfigParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    write_error_record(active_out, e.what(), 1);
    return 1;
  } catch (const structbandit::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    write_error_record(active_out, e.what(), 1);
    return 1;
  } catch (const std::exception& e) {
    if (g_cancel.load()) {
      std::cerr << "interrupted\n";
      return 130;
    }
    std::cerr << "error: " << e.what() << "\n";
    write_error_record(active_out, e.what(), 2);
    return 2;
  }
  return 0;
}
