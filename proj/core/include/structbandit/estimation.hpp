#pragma once

#include <Eigen/Core>

#include "structbandit/structure.hpp"

namespace structbandit {

/// Norm-regularized least squares:
///   min_theta (1/t) ||y - X theta||_2^2 + lambda * penalty(theta)
/// where penalty is the model's solver penalty (squared L2 for ridge).
struct RegressionProblem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  double lambda = 0.0;
  StructureModel model;
};

enum class StepRule { FixedInverseLipschitz, Backtracking };

struct SolverConfig {
  int max_iters = 10000;
  double rel_tol = 1e-8;  // relative objective decrease
  StepRule step_rule = StepRule::FixedInverseLipschitz;
};

struct Estimate {
  Eigen::VectorXd theta_hat;
  int iterations = 0;
  double objective = 0.0;
  bool converged = false;
};

double objective_value(const RegressionProblem& prob, const Eigen::VectorXd& theta);

/// Exact ridge path: theta = (X^T X + t*lambda*I)^{-1} X^T y, the minimizer
/// of the (1/t)-scaled objective with the squared penalty. Requires the L2
/// kind. A singular system (lambda = 0 with rank-deficient X) throws.
Estimate solve_ridge_closed_form(const RegressionProblem& prob);

/// Accelerated proximal gradient (FISTA) with adaptive restart: the
/// accepted objective sequence is non-increasing; converged means the
/// relative objective decrease dropped below rel_tol before max_iters.
Estimate solve_prox_grad(const RegressionProblem& prob, const SolverConfig& cfg);

/// Same solver on precomputed Gram quantities (gram = X^T X, xty = X^T y,
/// yty = ||y||^2, t rows). Iteration cost is then O(p^2) independent of t;
/// `warm_start` seeds the iterate when given.
Estimate solve_prox_grad_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty,
                              double yty, int t, double lambda, const StructureModel& model,
                              const SolverConfig& cfg,
                              const Eigen::VectorXd* warm_start = nullptr);

/// Ridge closed form on Gram quantities.
Estimate solve_ridge_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty,
                          double yty, int t, double lambda);

/// Exhaustive minimizer over the uniform grid [-half_width, half_width]^p.
/// Test oracle only; p <= 3 and grid_points <= 401 per axis.
Estimate oracle_grid_solve(const RegressionProblem& prob, double half_width,
                           int grid_points);

}  // namespace structbandit
