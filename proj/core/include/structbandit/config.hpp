#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "structbandit/experiments.hpp"

namespace structbandit {

/// Raised for schema violations; the message names the offending key or
/// field path.
class ConfigParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ConfigParseError when `j` contains a key outside `allowed`,
/// naming the key and its path.
void reject_unknown_keys(const nlohmann::json& j,
                         const std::vector<std::string>& allowed,
                         const std::string& path);

/// Fully-specified single episode.
struct EpisodeConfig {
  StructureModel model = StructureModel::l2(1);
  DecisionSet set = DecisionSet::unit_ball(1);
  Environment env;
  ScheduleParams schedule;
  SolverConfig solver;
  EpisodeOptions options;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// Parses and validates an episode config. Unknown keys are rejected with
/// the offending key named; field errors carry the field path. Schedule
/// widths given as "auto" are resolved from the geometry defaults.
EpisodeConfig parse_episode_config(const nlohmann::json& j);

ExperimentSpec parse_sweep_config(const nlohmann::json& j);

struct WidthRequest {
  StructureModel model = StructureModel::l2(1);
  int samples = 100000;
  std::uint64_t seed = 0;
};

WidthRequest parse_width_config(const nlohmann::json& j);

/// Maps the CLI's --set names (l1-ball, l2-ball, ...) to a structure model
/// whose unit norm ball is the requested set.
StructureModel width_set_from_name(const std::string& name, int dim);

struct LambdaDiagnosticConfig {
  StructureModel model = StructureModel::l2(1);
  DecisionSet set = DecisionSet::unit_ball(1);
  Environment env;
  std::vector<int> t_grid;
  int trials = 100;
  std::uint64_t seed = 0;
};

LambdaDiagnosticConfig parse_lambda_diagnostic_config(const nlohmann::json& j);

struct REDiagnosticConfig {
  StructureModel model = StructureModel::l2(1);
  DecisionSet set = DecisionSet::unit_ball(1);
  Eigen::VectorXd theta_star;
  std::vector<int> t_grid;
  std::vector<std::uint64_t> seeds;
  int directions = 50;
};

REDiagnosticConfig parse_re_diagnostic_config(const nlohmann::json& j);

}  // namespace structbandit
