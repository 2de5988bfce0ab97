#include "structbandit/estimation.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "structbandit/rng.hpp"

namespace structbandit {

namespace {

void check_problem(const RegressionProblem& prob) {
  if (prob.X.rows() < 1) throw InputError("regression: need at least one row");
  if (prob.X.rows() != prob.y.size())
    throw InputError("regression: row count of X must equal length of y");
  if (prob.X.cols() != prob.model.dim())
    throw InputError("regression: column count of X must equal model dim");
  if (!prob.X.allFinite() || !prob.y.allFinite())
    throw InputError("regression: NaN or Inf in data");
}

// Largest eigenvalue of a symmetric PSD matrix by power iteration. The
// start vector is a fixed pseudo-random draw: a structured start (ones,
// a basis vector) can sit exactly in an invariant subspace of a structured
// gram matrix and trap the iteration below the top eigenvalue.
double top_eigenvalue(const Eigen::MatrixXd& gram) {
  const int p = static_cast<int>(gram.rows());
  SplitMix64 seed_rng(0x9f0e11);
  Eigen::VectorXd v = gaussian_vector(p, seed_rng);
  v.normalize();
  double lambda = 0.0;
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd w = gram * v;
    const double nrm = w.norm();
    if (nrm < 1e-300) return 0.0;
    w /= nrm;
    const double next = w.dot(gram * w);
    if (std::abs(next - lambda) <= 1e-9 * std::max(1.0, std::abs(next))) return next;
    lambda = next;
    v = w;
  }
  return lambda;
}

struct GramObjective {
  const Eigen::MatrixXd& gram;
  const Eigen::VectorXd& xty;
  double yty;
  double t;

  double smooth(const Eigen::VectorXd& theta) const {
    return (theta.dot(gram * theta) - 2.0 * theta.dot(xty) + yty) / t;
  }
  Eigen::VectorXd grad(const Eigen::VectorXd& theta) const {
    return (2.0 / t) * (gram * theta - xty);
  }
};

}  // namespace

double objective_value(const RegressionProblem& prob, const Eigen::VectorXd& theta) {
  check_problem(prob);
  const double t = static_cast<double>(prob.X.rows());
  return (prob.y - prob.X * theta).squaredNorm() / t + prob.lambda * prob.model.penalty(theta);
}

Estimate solve_ridge_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty,
                          double yty, int t, double lambda) {
  const int p = static_cast<int>(gram.rows());
  Eigen::MatrixXd A = gram;
  A.diagonal().array() += static_cast<double>(t) * lambda;
  if (lambda == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible())
      throw std::runtime_error("ridge: singular system (lambda = 0, rank-deficient X)");
    Estimate est;
    est.theta_hat = lu.solve(xty);
    est.iterations = 0;
    est.converged = true;
    est.objective = (est.theta_hat.dot(gram * est.theta_hat) -
                     2.0 * est.theta_hat.dot(xty) + yty) /
                        t +
                    lambda * est.theta_hat.squaredNorm();
    return est;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("ridge: Cholesky factorization failed");
  Estimate est;
  est.theta_hat = llt.solve(xty);
  est.iterations = 0;
  est.converged = true;
  est.objective =
      (est.theta_hat.dot(gram * est.theta_hat) - 2.0 * est.theta_hat.dot(xty) + yty) / t +
      lambda * est.theta_hat.squaredNorm();
  (void)p;
  return est;
}

Estimate solve_ridge_closed_form(const RegressionProblem& prob) {
  check_problem(prob);
  if (prob.model.kind() != NormKind::L2)
    throw InputError("solve_ridge_closed_form: model kind must be l2");
  const int t = static_cast<int>(prob.X.rows());
  Estimate est = solve_ridge_gram(prob.X.transpose() * prob.X, prob.X.transpose() * prob.y,
                                  prob.y.squaredNorm(), t, prob.lambda);
  est.objective = objective_value(prob, est.theta_hat);
  return est;
}

Estimate solve_prox_grad_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty,
                              double yty, int t, double lambda, const StructureModel& model,
                              const SolverConfig& cfg, const Eigen::VectorXd* warm_start) {
  const int p = model.dim();
  if (gram.rows() != p || gram.cols() != p || xty.size() != p)
    throw InputError("solve_prox_grad_gram: dimension mismatch");
  if (t < 1) throw InputError("solve_prox_grad_gram: t must be positive");
  if (cfg.max_iters < 1) throw InputError("solver: max_iters must be positive");
  if (!(cfg.rel_tol > 0.0 && cfg.rel_tol < 1.0))
    throw InputError("solver: rel_tol must be in (0, 1)");

  GramObjective f{gram, xty, yty, static_cast<double>(t)};
  auto full_obj = [&](const Eigen::VectorXd& th) {
    return f.smooth(th) + lambda * model.penalty(th);
  };
  auto prox_step = [&](const Eigen::VectorXd& point, double tau) {
    return tau > 0.0 ? model.prox(point, tau) : point;
  };

  const double lip = std::max(1.01 * (2.0 / t) * top_eigenvalue(gram), 1e-12);
  double step = 1.0 / lip;

  Eigen::VectorXd x = warm_start ? *warm_start : Eigen::VectorXd::Zero(p);
  Eigen::VectorXd y_acc = x;
  double obj = full_obj(x);
  double momentum = 1.0;

  Estimate est;
  est.converged = false;

  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    Eigen::VectorXd grad_y = f.grad(y_acc);
    double eta = step;
    Eigen::VectorXd x_next;
    if (cfg.step_rule == StepRule::Backtracking) {
      const double f_y = f.smooth(y_acc);
      for (int bt = 0; bt < 60; ++bt) {
        x_next = prox_step(y_acc - eta * grad_y, eta * lambda);
        const Eigen::VectorXd d = x_next - y_acc;
        if (f.smooth(x_next) <= f_y + grad_y.dot(d) + d.squaredNorm() / (2.0 * eta) + 1e-15)
          break;
        eta *= 0.5;
      }
    } else {
      x_next = prox_step(y_acc - eta * grad_y, eta * lambda);
    }

    double obj_next = full_obj(x_next);
    if (obj_next > obj) {
      // Restart: plain proximal step from the last accepted iterate keeps
      // the objective non-increasing.
      momentum = 1.0;
      y_acc = x;
      grad_y = f.grad(y_acc);
      x_next = prox_step(y_acc - eta * grad_y, eta * lambda);
      obj_next = full_obj(x_next);
      if (obj_next > obj) {
        // Even the plain proximal step ascends. At a stationary point that
        // is rounding noise and the solve is done; otherwise the Lipschitz
        // estimate was too small, so shrink the step and retry.
        const Eigen::VectorXd fp = prox_step(x - step * f.grad(x), step * lambda);
        if ((fp - x).norm() <= 1e-5 * (1.0 + x.norm())) {
          est.converged = true;
          break;
        }
        step *= 0.5;
        continue;
      }
    }

    const Eigen::VectorXd diff = x_next - x;
    const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y_acc = x_next + ((momentum - 1.0) / momentum_next) * diff;
    momentum = momentum_next;
    x = x_next;

    const double decrease = obj - obj_next;
    obj = obj_next;
    if (decrease <= cfg.rel_tol * std::max(1.0, std::abs(obj))) {
      // The decrease test alone can stall far from the minimizer on badly
      // conditioned problems; also require the proximal fixed-point
      // residual to be small before declaring convergence.
      const Eigen::VectorXd fp = prox_step(x - step * f.grad(x), step * lambda);
      if ((fp - x).norm() <=
          std::max(1e4 * cfg.rel_tol, 1e-10) * (1.0 + x.norm())) {
        est.converged = true;
        ++iter;
        break;
      }
    }
  }

  est.theta_hat = x;
  est.iterations = iter;
  est.objective = obj;
  return est;
}

Estimate solve_prox_grad(const RegressionProblem& prob, const SolverConfig& cfg) {
  check_problem(prob);
  const int t = static_cast<int>(prob.X.rows());
  Estimate est =
      solve_prox_grad_gram(prob.X.transpose() * prob.X, prob.X.transpose() * prob.y,
                           prob.y.squaredNorm(), t, prob.lambda, prob.model, cfg);
  est.objective = objective_value(prob, est.theta_hat);
  return est;
}

Estimate oracle_grid_solve(const RegressionProblem& prob, double half_width,
                           int grid_points) {
  check_problem(prob);
  const int p = prob.model.dim();
  if (p > 3) throw InputError("oracle_grid_solve: only p <= 3 supported");
  if (grid_points < 2 || grid_points > 401)
    throw InputError("oracle_grid_solve: grid_points must be in [2, 401]");
  if (!(half_width > 0.0)) throw InputError("oracle_grid_solve: half_width must be positive");

  const double t = static_cast<double>(prob.X.rows());
  const Eigen::MatrixXd gram = prob.X.transpose() * prob.X;
  const Eigen::VectorXd xty = prob.X.transpose() * prob.y;
  const double yty = prob.y.squaredNorm();

  auto grid_value = [&](int idx) {
    return -half_width + 2.0 * half_width * idx / (grid_points - 1);
  };

  Eigen::VectorXd theta(p), best_theta = Eigen::VectorXd::Zero(p);
  double best = std::numeric_limits<double>::infinity();
  long evals = 0;

  const int n1 = grid_points;
  const int n2 = p >= 2 ? grid_points : 1;
  const int n3 = p >= 3 ? grid_points : 1;
  for (int i = 0; i < n1; ++i) {
    theta[0] = grid_value(i);
    for (int j = 0; j < n2; ++j) {
      if (p >= 2) theta[1] = grid_value(j);
      for (int k = 0; k < n3; ++k) {
        if (p >= 3) theta[2] = grid_value(k);
        const double obj = (theta.dot(gram * theta) - 2.0 * theta.dot(xty) + yty) / t +
                           prob.lambda * prob.model.penalty(theta);
        ++evals;
        if (obj < best) {
          best = obj;
          best_theta = theta;
        }
      }
    }
  }

  Estimate est;
  est.theta_hat = best_theta;
  est.iterations = static_cast<int>(std::min<long>(evals, std::numeric_limits<int>::max()));
  est.objective = objective_value(prob, best_theta);
  est.converged = true;
  return est;
}

}  // namespace structbandit
