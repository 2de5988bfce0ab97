#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "structbandit/bandit.hpp"
#include "structbandit/geometry.hpp"

namespace structbandit {

/// A reproducible experiment campaign: one structure template swept over a
/// (dimension x horizon) grid with a fixed seed list. Widths, psi, and the
/// hidden parameter are derived per cell.
struct ExperimentSpec {
  std::string name = "sweep";
  std::string output_dir = "out";

  // structure template (dimension comes from the grid)
  std::string structure_kind = "l1";  // l1 | l2 | group | nuclear
  int structure_size = 1;             // s / active groups / rank
  int group_size = 0;                 // group kind: contiguous groups of this size
  int nuclear_rows = 0;               // nuclear kind: row count; cols = p / rows

  // hidden-parameter template; defaults to the structure template
  std::string theta_kind;
  int theta_size = 0;

  std::string set_kind = "ball";  // ball | cube
  double noise_bound = 0.1;
  NoiseKind noise_kind = NoiseKind::Uniform;

  std::vector<int> horizons;
  std::vector<int> dims;
  std::vector<std::uint64_t> seeds;

  ScheduleParams schedule_template;  // constants; widths/psi resolved per cell
  bool auto_widths = true;
  int omega_width_samples = 100000;

  SolverConfig solver;
  bool record_kappa = true;
  int kappa_directions = 50;
  bool emit_svg = true;

  nlohmann::json to_json() const;
  static ExperimentSpec from_json(const nlohmann::json& j);
};

/// Builds the structure model / theta model / decision set for one cell of
/// the grid. Throws InputError when the template cannot be instantiated at
/// this dimension (e.g. p not divisible by the group size).
StructureModel instantiate_structure(const ExperimentSpec& spec, int dim);
StructureModel instantiate_theta_model(const ExperimentSpec& spec, int dim);
DecisionSet instantiate_set(const ExperimentSpec& spec, int dim);

/// Resolves the width/psi inputs of a schedule for a concrete model.
ScheduleParams resolve_schedule(const ScheduleParams& tmpl, const StructureModel& model,
                                int horizon, bool auto_widths, int omega_width_samples);

struct SweepCell {
  std::string id;  // stable name: includes the config content hash
  int dim = 0;
  int horizon = 0;
  std::uint64_t seed = 0;
  std::string status;  // done | cached | skipped
  std::string reason;  // machine-readable, for skipped cells
  double total_regret = 0.0;
  double containment_rate = 0.0;
  double mean_lambda = 0.0;
  std::optional<double> kappa_at_burnin;
  bool healthy = true;
};

struct SweepAggregate {
  int dim = 0;
  int horizon = 0;
  int count = 0;  // equals |seeds| when no cell was skipped
  double mean_regret = 0.0;
  double std_regret = 0.0;
  double mean_containment = 0.0;
  std::optional<double> mean_kappa;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<SweepAggregate> aggregates;

  bool operator==(const SweepResult& other) const;
};

/// Runs every (dim, horizon, seed) cell, persisting a trace CSV and a meta
/// JSON per cell under output_dir/traces. Cells whose artifacts already
/// exist (content-hash keyed filenames) are skipped as cached; infeasible
/// cells are recorded as skipped with a reason and the sweep continues.
/// Aggregation is a deterministic post-pass over the persisted files.
SweepResult run_sweep(const ExperimentSpec& spec, int threads = 1,
                      const std::atomic<bool>* cancel = nullptr);

/// Recomputes the SweepResult purely from the files under spec.output_dir;
/// run_sweep's return value is exactly this.
SweepResult aggregate_sweep(const ExperimentSpec& spec);

/// Uniform-arm noise concentration: for each t, the mean over `trials` of
/// the dual-norm statistic R*((1/t) X^T omega), and the log-log slope of
/// that mean against t.
struct ConcentrationTable {
  std::vector<int> t_grid;
  std::vector<double> mean_stat;
  std::vector<double> std_stat;
  std::optional<double> loglog_slope;  // absent when a mean is zero
};

ConcentrationTable concentration_diagnostic(const Environment& env, const DecisionSet& set,
                                            const StructureModel& model,
                                            const std::vector<int>& t_grid, int trials,
                                            std::uint64_t seed);

/// Restricted-eigenvalue probe along a growing uniform design: kappa_hat
/// per (seed, t), and per seed the first grid t with kappa_hat > 0.
struct REPhaseTable {
  std::vector<int> t_grid;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<double>> kappa;  // [seed][t index]
  std::vector<int> first_positive_t;       // -1 when never positive
};

REPhaseTable re_phase_diagnostic(const DecisionSet& set, const StructureModel& model,
                                 const Eigen::VectorXd& theta_star,
                                 const std::vector<int>& t_grid,
                                 const std::vector<std::uint64_t>& seeds, int directions);

struct ContainmentSummary {
  std::vector<double> per_trace;
  double pooled = 0.0;
  int worst_round = -1;        // round with the highest miss fraction
  double worst_fraction = 1.0; // containment fraction at that round
};

/// Fraction of rounds past the burn-in with the containment flag set.
ContainmentSummary containment_report(const std::vector<RegretTrace>& traces);

struct RegretSummary {
  std::vector<int> horizons;
  std::vector<double> mean_regret;
  std::vector<double> std_regret;
  std::optional<double> loglog_slope;  // needs >= 3 horizons and positive means
  bool sublinear = false;
  bool degenerate = false;  // some horizon had non-positive mean regret
};

enum class RegretFit { LogLogHorizon };

RegretSummary regret_summary(const std::vector<RegretTrace>& traces,
                             RegretFit fit = RegretFit::LogLogHorizon);

struct BootstrapDiff {
  double observed = 0.0;  // mean(x) - mean(y)
  double lower95 = 0.0;   // one-sided 95% lower bound of the bootstrap diff
  int resamples = 0;
};

/// Bootstrap (resampled means) of mean(x) - mean(y); no distributional
/// assumptions. Deterministic per seed.
BootstrapDiff bootstrap_mean_diff(const std::vector<double>& x, const std::vector<double>& y,
                                  int resamples, std::uint64_t seed);

/// Least-squares slope of log(y) against log(x); nullopt when any value is
/// non-positive or fewer than two points are given.
std::optional<double> loglog_slope(const std::vector<double>& x,
                                   const std::vector<double>& y);

/// Minimal self-contained SVG polyline chart (one file, no dependencies).
struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::vector<SvgSeries>& series, bool log_log = false);

/// FNV-1a content hash of a canonical JSON dump; keys sweep cache entries.
std::uint64_t content_hash(const nlohmann::json& j);

}  // namespace structbandit
