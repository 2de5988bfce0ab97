#include "structbandit/config.hpp"

#include <algorithm>

namespace structbandit {

void reject_unknown_keys(const nlohmann::json& j,
                         const std::vector<std::string>& allowed,
                         const std::string& path) {
  if (!j.is_object()) throw ConfigParseError(path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ConfigParseError("unknown key '" + it.key() + "' in " + path);
  }
}

namespace {

template <typename T>
T require(const nlohmann::json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw ConfigParseError(path + "." + key + ": required field missing");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigParseError(path + "." + key + ": " + e.what());
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigParseError(path + "." + key + ": " + e.what());
  }
}

StructureModel parse_structure(const nlohmann::json& j, const std::string& path) {
  reject_unknown_keys(j, {"kind", "p", "s", "groups", "shape", "psi"}, path);
  try {
    return StructureModel::from_json(j);
  } catch (const InputError& e) {
    throw ConfigParseError(path + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigParseError(path + ": " + e.what());
  }
}

DecisionSet parse_set(const nlohmann::json& j, int dim, const std::string& path) {
  reject_unknown_keys(j, {"kind", "p", "vertices"}, path);
  nlohmann::json full = j;
  if (!full.contains("p")) full["p"] = dim;
  try {
    DecisionSet set = DecisionSet::from_json(full);
    if (set.dim() != dim)
      throw ConfigParseError(path + ".p: decision set dimension must equal p");
    return set;
  } catch (const InputError& e) {
    throw ConfigParseError(path + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigParseError(path + ": " + e.what());
  }
}

NoiseKind parse_noise_kind(const std::string& s, const std::string& path) {
  if (s == "uniform") return NoiseKind::Uniform;
  if (s == "rademacher") return NoiseKind::Rademacher;
  if (s == "zero") return NoiseKind::Zero;
  throw ConfigParseError(path + ".kind: unknown noise kind '" + s + "'");
}

Environment parse_noise(const nlohmann::json& j, const std::string& path) {
  reject_unknown_keys(j, {"kind", "B"}, path);
  Environment env;
  env.noise_kind = parse_noise_kind(get_or<std::string>(j, "kind", path, "uniform"), path);
  env.noise_bound = get_or<double>(j, "B", path, 0.1);
  if (env.noise_bound < 0.0)
    throw ConfigParseError(path + ".B: noise bound must be non-negative");
  return env;
}

Eigen::VectorXd parse_theta(const nlohmann::json& j, const StructureModel& model,
                            std::uint64_t seed, const std::string& path) {
  reject_unknown_keys(j, {"values", "seed_salt"}, path);
  if (j.contains("values")) {
    const auto vals = require<std::vector<double>>(j, "values", path);
    if (static_cast<int>(vals.size()) != model.dim())
      throw ConfigParseError(path + ".values: length must equal p");
    Eigen::VectorXd theta =
        Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
    if (std::abs(theta.norm() - 1.0) > 1e-6)
      throw ConfigParseError(path + ".values: theta must have unit L2 norm");
    return theta;
  }
  const std::uint64_t salt = get_or<std::uint64_t>(j, "seed_salt", path, 0x11e7a);
  return make_structured_theta(model, derive_seed(seed, salt));
}

double parse_width_field(const nlohmann::json& j, const std::string& key,
                         const std::string& path, double auto_value) {
  if (!j.contains(key)) return auto_value;
  const auto& v = j.at(key);
  if (v.is_string()) {
    if (v.get<std::string>() == "auto") return auto_value;
    throw ConfigParseError(path + "." + key + ": expected a number or \"auto\"");
  }
  if (!v.is_number()) throw ConfigParseError(path + "." + key + ": expected a number");
  const double d = v.get<double>();
  if (!(d > 0.0)) throw ConfigParseError(path + "." + key + ": must be positive");
  return d;
}

ScheduleParams parse_schedule(const nlohmann::json& j, const StructureModel& model,
                              int horizon, const std::string& path) {
  reject_unknown_keys(j,
                      {"epsilon", "gamma", "burnin_const", "lambda_const", "radius_const",
                       "arm_bound", "cap_width", "omega_width", "omega_diameter", "psi",
                       "omega_width_samples"},
                      path);
  ScheduleParams base;
  base.epsilon = get_or<double>(j, "epsilon", path, 1.0);
  base.gamma = get_or<double>(j, "gamma", path, 1.0);
  base.burnin_const = get_or<double>(j, "burnin_const", path, 1.0);
  base.lambda_const = get_or<double>(j, "lambda_const", path, 1.0);
  base.radius_const = get_or<double>(j, "radius_const", path, 1.0);
  base.arm_bound = get_or<double>(j, "arm_bound", path, 1.0);
  base.omega_diameter = get_or<double>(j, "omega_diameter", path, model.omega_diameter());
  const int width_samples = get_or<int>(j, "omega_width_samples", path, 100000);

  // the Monte-Carlo omega width only runs when some width is left on "auto"
  const auto explicit_number = [&j](const char* key) {
    return j.contains(key) && j.at(key).is_number();
  };
  ScheduleParams resolved = base;
  resolved.horizon = horizon;
  if (explicit_number("cap_width") && explicit_number("omega_width") &&
      explicit_number("psi")) {
    resolved.cap_width = parse_width_field(j, "cap_width", path, 0.0);
    resolved.omega_width = parse_width_field(j, "omega_width", path, 0.0);
    resolved.psi = parse_width_field(j, "psi", path, 0.0);
    return resolved;
  }
  resolved = resolve_schedule(base, model, horizon, /*auto_widths=*/true, width_samples);
  resolved.cap_width = parse_width_field(j, "cap_width", path, resolved.cap_width);
  resolved.omega_width = parse_width_field(j, "omega_width", path, resolved.omega_width);
  resolved.psi = parse_width_field(j, "psi", path, resolved.psi);
  resolved.omega_diameter = base.omega_diameter;
  return resolved;
}

SolverConfig parse_solver(const nlohmann::json& j, const std::string& path) {
  reject_unknown_keys(j, {"max_iters", "rel_tol", "step_rule"}, path);
  SolverConfig cfg;
  cfg.max_iters = get_or<int>(j, "max_iters", path, 10000);
  cfg.rel_tol = get_or<double>(j, "rel_tol", path, 1e-8);
  const std::string rule = get_or<std::string>(j, "step_rule", path, "fixed");
  if (rule == "fixed")
    cfg.step_rule = StepRule::FixedInverseLipschitz;
  else if (rule == "backtracking")
    cfg.step_rule = StepRule::Backtracking;
  else
    throw ConfigParseError(path + ".step_rule: expected 'fixed' or 'backtracking'");
  if (cfg.max_iters < 1) throw ConfigParseError(path + ".max_iters: must be positive");
  if (!(cfg.rel_tol > 0.0 && cfg.rel_tol < 1.0))
    throw ConfigParseError(path + ".rel_tol: must be in (0, 1)");
  return cfg;
}

}  // namespace

nlohmann::json EpisodeConfig::to_json() const {
  nlohmann::json j;
  j["p"] = model.dim();
  j["T"] = schedule.horizon;
  j["structure"] = model.to_json();
  j["decision_set"] = set.to_json();
  j["noise"] = {{"kind", env.noise_kind == NoiseKind::Uniform      ? "uniform"
                         : env.noise_kind == NoiseKind::Rademacher ? "rademacher"
                                                                   : "zero"},
                {"B", env.noise_bound}};
  j["theta"] = {{"values", std::vector<double>(env.theta_star.data(),
                                               env.theta_star.data() + env.theta_star.size())}};
  j["schedule"] = schedule.to_json();
  j["schedule"].erase("T");  // the horizon lives at the top level
  j["solver"] = {{"max_iters", solver.max_iters}, {"rel_tol", solver.rel_tol}};
  j["seed"] = seed;
  j["record_kappa"] = options.record_kappa_at_burnin;
  j["kappa_directions"] = options.kappa_directions;
  j["debug_checks"] = options.debug_checks;
  return j;
}

EpisodeConfig parse_episode_config(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"p", "T", "structure", "decision_set", "noise", "theta", "schedule",
                       "solver", "seed", "record_kappa", "kappa_directions", "debug_checks"},
                      "config");
  const int p = require<int>(j, "p", "config");
  const int horizon = require<int>(j, "T", "config");
  if (p < 1) throw ConfigParseError("config.p: must be positive");
  if (horizon < 2) throw ConfigParseError("config.T: must be at least 2");

  EpisodeConfig cfg;
  cfg.model = parse_structure(require<nlohmann::json>(j, "structure", "config"),
                              "config.structure");
  if (cfg.model.dim() != p)
    throw ConfigParseError("config.structure.p: must equal config.p");

  cfg.set = j.contains("decision_set")
                ? parse_set(j.at("decision_set"), p, "config.decision_set")
                : DecisionSet::unit_ball(p);

  Environment env = j.contains("noise") ? parse_noise(j.at("noise"), "config.noise")
                                        : Environment{};
  if (!j.contains("noise")) {
    env.noise_kind = NoiseKind::Uniform;
    env.noise_bound = 0.1;
  }

  cfg.seed = get_or<std::uint64_t>(j, "seed", "config", 0);
  env.theta_star = j.contains("theta")
                       ? parse_theta(j.at("theta"), cfg.model, cfg.seed, "config.theta")
                       : make_structured_theta(cfg.model, derive_seed(cfg.seed, 0x11e7a));
  cfg.env = env;

  cfg.schedule = parse_schedule(j.contains("schedule") ? j.at("schedule") : nlohmann::json::object(),
                                cfg.model, horizon, "config.schedule");
  cfg.solver = j.contains("solver") ? parse_solver(j.at("solver"), "config.solver")
                                    : SolverConfig{};
  cfg.options.record_kappa_at_burnin = get_or<bool>(j, "record_kappa", "config", false);
  cfg.options.kappa_directions = get_or<int>(j, "kappa_directions", "config", 50);
  cfg.options.debug_checks = get_or<bool>(j, "debug_checks", "config", false);
  return cfg;
}

ExperimentSpec parse_sweep_config(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"name", "out", "structure", "theta", "decision_set", "noise", "T_list",
                       "p_list", "seeds", "schedule", "auto_widths", "omega_width_samples",
                       "solver", "record_kappa", "kappa_directions", "emit_svg"},
                      "config");
  ExperimentSpec spec;
  spec.name = get_or<std::string>(j, "name", "config", "sweep");
  if (spec.name.empty() ||
      spec.name.find_first_not_of(
          "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._-") !=
          std::string::npos)
    throw ConfigParseError(
        "config.name: must be non-empty and use only letters, digits, '.', '_', '-' "
        "(it names artifact files)");
  spec.output_dir = get_or<std::string>(j, "out", "config", "out");

  const nlohmann::json st = require<nlohmann::json>(j, "structure", "config");
  reject_unknown_keys(st, {"kind", "s", "group_size", "rows"}, "config.structure");
  spec.structure_kind = require<std::string>(st, "kind", "config.structure");
  spec.structure_size = get_or<int>(st, "s", "config.structure", 1);
  spec.group_size = get_or<int>(st, "group_size", "config.structure", 0);
  spec.nuclear_rows = get_or<int>(st, "rows", "config.structure", 0);

  if (j.contains("theta")) {
    const nlohmann::json th = j.at("theta");
    reject_unknown_keys(th, {"kind", "s"}, "config.theta");
    spec.theta_kind = require<std::string>(th, "kind", "config.theta");
    spec.theta_size = get_or<int>(th, "s", "config.theta", 1);
  }

  spec.set_kind = get_or<std::string>(j, "decision_set", "config", "ball");
  if (spec.set_kind != "ball" && spec.set_kind != "cube")
    throw ConfigParseError("config.decision_set: sweeps support 'ball' or 'cube'");

  if (j.contains("noise")) {
    const Environment env = parse_noise(j.at("noise"), "config.noise");
    spec.noise_bound = env.noise_bound;
    spec.noise_kind = env.noise_kind;
  }

  spec.horizons = require<std::vector<int>>(j, "T_list", "config");
  spec.dims = require<std::vector<int>>(j, "p_list", "config");
  spec.seeds = require<std::vector<std::uint64_t>>(j, "seeds", "config");
  if (spec.horizons.empty()) throw ConfigParseError("config.T_list: must be non-empty");
  if (spec.dims.empty()) throw ConfigParseError("config.p_list: must be non-empty");
  if (spec.seeds.empty()) throw ConfigParseError("config.seeds: must be non-empty");
  {
    auto sorted = spec.seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ConfigParseError("config.seeds: seeds must be distinct");
  }

  if (j.contains("schedule")) {
    const nlohmann::json sch = j.at("schedule");
    reject_unknown_keys(sch,
                        {"epsilon", "gamma", "burnin_const", "lambda_const", "radius_const",
                         "arm_bound"},
                        "config.schedule");
    spec.schedule_template.epsilon = get_or<double>(sch, "epsilon", "config.schedule", 1.0);
    spec.schedule_template.gamma = get_or<double>(sch, "gamma", "config.schedule", 1.0);
    spec.schedule_template.burnin_const =
        get_or<double>(sch, "burnin_const", "config.schedule", 1.0);
    spec.schedule_template.lambda_const =
        get_or<double>(sch, "lambda_const", "config.schedule", 1.0);
    spec.schedule_template.radius_const =
        get_or<double>(sch, "radius_const", "config.schedule", 1.0);
    spec.schedule_template.arm_bound = get_or<double>(sch, "arm_bound", "config.schedule", 1.0);
  }
  spec.auto_widths = get_or<bool>(j, "auto_widths", "config", true);
  spec.omega_width_samples = get_or<int>(j, "omega_width_samples", "config", 100000);
  spec.solver = j.contains("solver") ? parse_solver(j.at("solver"), "config.solver")
                                     : SolverConfig{};
  spec.record_kappa = get_or<bool>(j, "record_kappa", "config", true);
  spec.kappa_directions = get_or<int>(j, "kappa_directions", "config", 50);
  spec.emit_svg = get_or<bool>(j, "emit_svg", "config", true);

  // fail fast on templates that cannot be built at any requested dimension
  for (int dim : spec.dims) {
    try {
      (void)instantiate_structure(spec, dim);
      (void)instantiate_theta_model(spec, dim);
    } catch (const InputError&) {
      // per-cell instantiation failures become skipped cells, not config errors
    }
  }
  return spec;
}

ExperimentSpec ExperimentSpec::from_json(const nlohmann::json& j) {
  return parse_sweep_config(j);
}

StructureModel width_set_from_name(const std::string& name, int dim) {
  if (name == "l1-ball") return StructureModel::l1(dim, 1);
  if (name == "l2-ball") return StructureModel::l2(dim);
  if (name == "group-ball") {
    std::vector<std::vector<int>> groups;
    for (int i = 0; i < dim; i += 2) {
      std::vector<int> g{i};
      if (i + 1 < dim) g.push_back(i + 1);
      groups.push_back(std::move(g));
    }
    return StructureModel::group_l12(dim, std::move(groups), 1);
  }
  if (name == "nuclear-ball") {
    for (int r = static_cast<int>(std::sqrt(static_cast<double>(dim))); r >= 1; --r)
      if (dim % r == 0) return StructureModel::nuclear(r, dim / r, 1);
  }
  throw ConfigParseError(
      "width.set: expected one of l1-ball, l2-ball, group-ball, nuclear-ball");
}

WidthRequest parse_width_config(const nlohmann::json& j) {
  reject_unknown_keys(j, {"set", "p", "samples", "seed", "structure"}, "config");
  WidthRequest req;
  const int p = require<int>(j, "p", "config");
  if (j.contains("structure")) {
    req.model = parse_structure(j.at("structure"), "config.structure");
    if (req.model.dim() != p) throw ConfigParseError("config.structure.p: must equal config.p");
  } else {
    req.model = width_set_from_name(require<std::string>(j, "set", "config"), p);
  }
  req.samples = get_or<int>(j, "samples", "config", 100000);
  req.seed = get_or<std::uint64_t>(j, "seed", "config", 0x5eed);
  if (req.samples < 2) throw ConfigParseError("config.samples: must be at least 2");
  return req;
}

LambdaDiagnosticConfig parse_lambda_diagnostic_config(const nlohmann::json& j) {
  reject_unknown_keys(j, {"structure", "decision_set", "noise", "t_grid", "trials", "seed"},
                      "config");
  LambdaDiagnosticConfig cfg;
  cfg.model = parse_structure(require<nlohmann::json>(j, "structure", "config"),
                              "config.structure");
  cfg.set = j.contains("decision_set")
                ? parse_set(j.at("decision_set"), cfg.model.dim(), "config.decision_set")
                : DecisionSet::unit_ball(cfg.model.dim());
  cfg.env = j.contains("noise") ? parse_noise(j.at("noise"), "config.noise") : Environment{};
  if (!j.contains("noise")) {
    cfg.env.noise_kind = NoiseKind::Uniform;
    cfg.env.noise_bound = 0.1;
  }
  cfg.env.theta_star = Eigen::VectorXd::Zero(cfg.model.dim());  // unused by the statistic
  cfg.t_grid = require<std::vector<int>>(j, "t_grid", "config");
  cfg.trials = get_or<int>(j, "trials", "config", 100);
  cfg.seed = get_or<std::uint64_t>(j, "seed", "config", 0);
  return cfg;
}

REDiagnosticConfig parse_re_diagnostic_config(const nlohmann::json& j) {
  reject_unknown_keys(j, {"structure", "decision_set", "theta", "t_grid", "seeds", "directions"},
                      "config");
  REDiagnosticConfig cfg;
  cfg.model = parse_structure(require<nlohmann::json>(j, "structure", "config"),
                              "config.structure");
  cfg.set = j.contains("decision_set")
                ? parse_set(j.at("decision_set"), cfg.model.dim(), "config.decision_set")
                : DecisionSet::unit_ball(cfg.model.dim());
  cfg.theta_star = j.contains("theta")
                       ? parse_theta(j.at("theta"), cfg.model, 0, "config.theta")
                       : make_structured_theta(cfg.model, derive_seed(0, 0x11e7a));
  cfg.t_grid = require<std::vector<int>>(j, "t_grid", "config");
  cfg.seeds = require<std::vector<std::uint64_t>>(j, "seeds", "config");
  cfg.directions = get_or<int>(j, "directions", "config", 50);
  return cfg;
}

}  // namespace structbandit
