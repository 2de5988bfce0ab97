#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Cholesky>
#include <json.hpp>

#include "structbandit/estimation.hpp"
#include "structbandit/rng.hpp"
#include "structbandit/structure.hpp"

namespace structbandit {

/// Horizon too short for the requested burn-in length; carries the smallest
/// horizon that would be feasible.
class ScheduleInfeasibleError : public std::runtime_error {
 public:
  ScheduleInfeasibleError(const std::string& msg, long min_feasible_horizon)
      : std::runtime_error(msg), min_feasible_horizon(min_feasible_horizon) {}
  long min_feasible_horizon;
};

class DegenerateArmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DecisionSetKind { UnitL2Ball, Hypercube, Polytope };

/// Compact convex decision set inside the closed unit L2 ball: the ball
/// itself, the hypercube [-1/sqrt(p), 1/sqrt(p)]^p, or the convex hull of
/// an explicit vertex list.
class DecisionSet {
 public:
  static DecisionSet unit_ball(int dim);
  static DecisionSet hypercube(int dim);
  static DecisionSet polytope(std::vector<Eigen::VectorXd> vertices);

  DecisionSetKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::vector<Eigen::VectorXd>& vertices() const { return vertices_; }

  struct OracleResult {
    Eigen::VectorXd x;
    double value = 0.0;
    bool degenerate = false;  // zero direction handed in
  };

  /// argmin_{x in X} <x, direction>. Ties on hypercube coordinates break to
  /// the negative side; polytope ties break to the lexicographically
  /// smallest vertex. A zero direction returns the origin, flagged.
  OracleResult linear_min(const Eigen::VectorXd& direction) const;

  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const;

  Eigen::VectorXd uniform_sample(SplitMix64& rng) const;

  /// Gap between the best and second-best extremal point values; 0 on a
  /// tie, nullopt for the ball (continuum of extremal points).
  std::optional<double> gap(const Eigen::VectorXd& theta_star) const;

  nlohmann::json to_json() const;
  static DecisionSet from_json(const nlohmann::json& j);

 private:
  DecisionSet() = default;
  double hull_distance(const Eigen::VectorXd& x) const;

  DecisionSetKind kind_ = DecisionSetKind::UnitL2Ball;
  int dim_ = 0;
  std::vector<Eigen::VectorXd> vertices_;
  Eigen::VectorXd centroid_;
  double bounding_radius_ = 0.0;
};

enum class NoiseKind { Uniform, Rademacher, Zero };

/// Hidden linear environment: theta_star with unit L2 norm and bounded
/// zero-mean noise (a valid bounded MDS instance).
struct Environment {
  Eigen::VectorXd theta_star;
  double noise_bound = 0.0;
  NoiseKind noise_kind = NoiseKind::Uniform;
  std::uint64_t rng_salt = 0;

  double draw_noise(SplitMix64& rng) const;
};

/// Builds a unit-norm parameter with the model's structure (s-sparse,
/// group-sparse, rank-r, or dense unit vector). Deterministic per seed.
Eigen::VectorXd make_structured_theta(const StructureModel& model, std::uint64_t seed);

/// Schedule constants. The theory behind the schedule leaves every absolute
/// constant symbolic; these are the knobs, with the width/compatibility
/// inputs supplied by the geometry module or overridden by the user.
struct ScheduleParams {
  int horizon = 0;              // T, known a priori
  double epsilon = 1.0;         // burn-in success-probability knob
  double gamma = 1.0;           // ellipsoid success-probability knob
  double burnin_const = 1.0;    // scales the burn-in length
  double lambda_const = 1.0;    // scales lambda_t
  double radius_const = 1.0;    // scales the ellipsoid radius
  double arm_bound = 1.0;       // sub-Gaussian bound of arms (<= 1 in the unit ball)
  double cap_width = 1.0;       // w(A_max) stand-in
  double omega_width = 1.0;     // w(Omega_R)
  double omega_diameter = 1.0;  // phi(Omega_R)
  double psi = 1.0;             // compatibility constant bound

  nlohmann::json to_json() const;
};

struct Schedule {
  int burnin = 0;     // n
  double beta = 0.0;  // ellipsoid radius
  double lambda_scale = 0.0;

  double lambda(int t) const { return lambda_scale / std::sqrt(static_cast<double>(t)); }
};

/// ceil(burnin_const * cap_width^2 * (epsilon^2 + log_horizon)); split out so
/// the formula is testable at an exact log value.
long burnin_rounds(double burnin_const, double cap_width, double epsilon,
                   double log_horizon);

/// burnin = ceil(burnin_const * cap_width^2 * (epsilon^2 + ln T)),
/// lambda(t) = lambda_const * (omega_width + sqrt(gamma^2 + ln T) * omega_diameter/2) / sqrt(t),
/// beta = radius_const * psi * (omega_width + sqrt(gamma^2 + ln T) * omega_diameter/2).
/// Throws ScheduleInfeasibleError when burnin >= T.
Schedule compute_schedule(const ScheduleParams& params);

/// Ellipsoid { theta : sqrt((theta - center)^T D (theta - center)) <= radius }.
/// D is jittered by delta*I with delta = 1e-9 * (1 + trace(D)/p), since D is
/// singular for t < p.
class ConfidenceEllipsoid {
 public:
  ConfidenceEllipsoid(Eigen::VectorXd center, const Eigen::MatrixXd& shape, double radius);

  const Eigen::VectorXd& center() const { return center_; }
  double radius() const { return radius_; }

  double mahalanobis(const Eigen::VectorXd& theta) const;
  bool contains(const Eigen::VectorXd& theta) const;

  /// argmin_{theta in ellipsoid} <x, theta> = center - radius * D^{-1} x / ||x||_{D^{-1}}.
  Eigen::VectorXd support_minimizer(const Eigen::VectorXd& x) const;

 private:
  Eigen::VectorXd center_;
  Eigen::MatrixXd shape_jittered_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  double radius_;
};

struct ArmSelection {
  Eigen::VectorXd x;      // x'
  Eigen::VectorXd theta;  // theta'
  double value = 0.0;     // <x', theta'>
  bool sphere_rejected = false;  // some iterate kept its unnormalized theta
  bool degenerate = false;       // x' = 0 (caller should fall back)
};

/// Alternating bilinear minimization of <x, theta> over x in the decision
/// set and theta in the ellipsoid, with theta projected back to the unit
/// sphere whenever the projection stays inside the ellipsoid. Returns the
/// best pair found; the reported value is non-increasing in the iteration
/// count.
ArmSelection select_arm_optimistic(const ConfidenceEllipsoid& ellipsoid,
                                   const DecisionSet& set, int iters);

struct PerturbedArm {
  Eigen::VectorXd x;
  bool fallback_used = false;
};

/// Uniform sample from X ∩ Ball(x_opt, ||x_opt||/2) by rejection from the
/// ball. After 1e4 consecutive rejections, falls back to the explicit
/// construction x_opt + xi*v with v shrunk until membership holds, flagged.
PerturbedArm perturb_and_play(const Eigen::VectorXd& x_opt, const DecisionSet& set,
                              std::uint64_t seed);

/// theta_tilde = theta_opt - x_opt/||x_opt||. For every x within
/// ||x_opt||/2 of x_opt and any ||theta_opt|| <= 1,
/// <x, theta_tilde> <= <x_opt, theta_opt>.
Eigen::VectorXd certificate_theta(const Eigen::VectorXd& x_opt,
                                  const Eigen::VectorXd& theta_opt);

/// Running state of one episode; D tracks X^T X through rank-one updates.
struct AlgorithmState {
  int t = 0;
  Eigen::MatrixXd design;       // rows played so far (T x p, first t rows valid)
  Eigen::VectorXd responses;    // losses
  Eigen::MatrixXd covariance;   // D_t = X_t^T X_t
  Eigen::VectorXd xty;          // X_t^T y_t
  double yty = 0.0;
  Eigen::VectorXd theta_hat;
  double lambda = 0.0;
  double beta = 0.0;

  void append(const Eigen::VectorXd& x, double loss);
  /// Frobenius gap between the rank-one-updated D and a fresh X^T X.
  double covariance_drift() const;
};

// Per-round deviation flags (bitmask in the trace).
inline constexpr unsigned kFlagSphereRejected = 1u;
inline constexpr unsigned kFlagPerturbFallback = 2u;
inline constexpr unsigned kFlagDegenerateArm = 4u;
inline constexpr unsigned kFlagSolverNotConverged = 8u;
inline constexpr unsigned kFlagOptimismViolated = 16u;

struct RegretTraceRow {
  int round = 0;
  double regret = 0.0;
  double cum_regret = 0.0;
  double lambda = 0.0;
  bool contained = false;
  unsigned flags = 0;
};

struct RegretTrace {
  std::vector<RegretTraceRow> rows;
  Eigen::MatrixXd arms;        // T x p, row t-1 = played arm (in memory only)
  double total_regret = 0.0;   // R_T
  double optimal_value = 0.0;  // <x*, theta*>
  std::optional<double> gap;
  int burnin = 0;
  double beta = 0.0;
  int solver_failures = 0;
  bool healthy = true;  // solver failed in <= 1% of rounds
  int sphere_rejections = 0;
  int perturb_fallbacks = 0;
  int degenerate_arms = 0;
  int optimism_violations = 0;
  double containment_rate = 0.0;  // over rounds > burnin
  std::optional<double> kappa_at_burnin;
  double mean_lambda = 0.0;  // over rounds > burnin

  void write_csv(std::ostream& os) const;
  static RegretTrace read_csv(std::istream& is);
};

struct EpisodeOptions {
  int alternation_iters = 20;
  bool record_kappa_at_burnin = false;
  int kappa_directions = 50;
  bool debug_checks = false;  // per-round optimism assertion bookkeeping
};

/// Runs one full episode: burn-in of uniform draws, then per round a
/// regularized estimate, confidence ellipsoid, optimistic bilinear arm
/// selection, and a uniform perturbation of the chosen arm. Fully
/// deterministic per seed.
RegretTrace run_episode(const Environment& env, const DecisionSet& set,
                        const StructureModel& model, const ScheduleParams& params,
                        const SolverConfig& solver, std::uint64_t seed,
                        const EpisodeOptions& options = {});

}  // namespace structbandit
