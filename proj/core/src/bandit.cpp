#include "structbandit/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/QR>

#include "structbandit/geometry.hpp"

namespace structbandit {

// ---------------------------------------------------------------------------
// DecisionSet

DecisionSet DecisionSet::unit_ball(int dim) {
  if (dim < 1) throw InputError("unit_ball: dim must be positive");
  DecisionSet s;
  s.kind_ = DecisionSetKind::UnitL2Ball;
  s.dim_ = dim;
  return s;
}

DecisionSet DecisionSet::hypercube(int dim) {
  if (dim < 1) throw InputError("hypercube: dim must be positive");
  DecisionSet s;
  s.kind_ = DecisionSetKind::Hypercube;
  s.dim_ = dim;
  return s;
}

DecisionSet DecisionSet::polytope(std::vector<Eigen::VectorXd> vertices) {
  if (vertices.empty()) throw InputError("polytope: vertex list must be non-empty");
  const int dim = static_cast<int>(vertices.front().size());
  for (const auto& v : vertices) {
    if (static_cast<int>(v.size()) != dim)
      throw InputError("polytope: vertices must share one dimension");
    if (v.norm() > 1.0 + 1e-12)
      throw InputError("polytope: every vertex must lie in the unit L2 ball");
  }
  {
    // non-empty interior: the vertex hull must be full-dimensional
    Eigen::MatrixXd spread(static_cast<long>(vertices.size()) - 1, dim);
    for (std::size_t i = 1; i < vertices.size(); ++i)
      spread.row(static_cast<long>(i) - 1) = (vertices[i] - vertices[0]).transpose();
    if (spread.rows() < dim ||
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(spread).rank() < dim)
      throw InputError("polytope: vertex hull must be full-dimensional");
  }
  DecisionSet s;
  s.kind_ = DecisionSetKind::Polytope;
  s.dim_ = dim;
  s.centroid_ = Eigen::VectorXd::Zero(dim);
  for (const auto& v : vertices) s.centroid_ += v;
  s.centroid_ /= static_cast<double>(vertices.size());
  s.bounding_radius_ = 0.0;
  for (const auto& v : vertices)
    s.bounding_radius_ = std::max(s.bounding_radius_, (v - s.centroid_).norm());
  s.vertices_ = std::move(vertices);
  return s;
}

DecisionSet::OracleResult DecisionSet::linear_min(const Eigen::VectorXd& direction) const {
  if (static_cast<int>(direction.size()) != dim_)
    throw InputError("linear_min: direction dimension mismatch");
  OracleResult r;
  if (direction.norm() < 1e-300) {
    r.x = Eigen::VectorXd::Zero(dim_);
    r.value = 0.0;
    r.degenerate = true;
    return r;
  }
  switch (kind_) {
    case DecisionSetKind::UnitL2Ball:
      r.x = -direction / direction.norm();
      break;
    case DecisionSetKind::Hypercube: {
      const double h = 1.0 / std::sqrt(static_cast<double>(dim_));
      r.x.resize(dim_);
      for (int i = 0; i < dim_; ++i) r.x[i] = direction[i] > 0.0 ? -h : h;
      // ties (zero coordinates) break to the negative side
      for (int i = 0; i < dim_; ++i)
        if (direction[i] == 0.0) r.x[i] = -h;
      break;
    }
    case DecisionSetKind::Polytope: {
      const Eigen::VectorXd* best = &vertices_.front();
      double best_val = direction.dot(*best);
      for (const auto& v : vertices_) {
        const double val = direction.dot(v);
        if (val < best_val) {
          best_val = val;
          best = &v;
        } else if (val == best_val && &v != best) {
          // lexicographic tie-break
          for (int i = 0; i < dim_; ++i) {
            if (v[i] < (*best)[i]) {
              best = &v;
              break;
            }
            if (v[i] > (*best)[i]) break;
          }
        }
      }
      r.x = *best;
      break;
    }
  }
  r.value = direction.dot(r.x);
  return r;
}

namespace {

// Wolfe's min-norm-point method over the shifted vertex set; finitely
// terminating, which a gradient scheme on the simplex is not at the
// tolerances membership needs.
double min_norm_point_distance(const std::vector<Eigen::VectorXd>& vertices,
                               const Eigen::VectorXd& x) {
  const int k = static_cast<int>(vertices.size());
  std::vector<Eigen::VectorXd> pts(k);
  for (int i = 0; i < k; ++i) pts[i] = vertices[static_cast<std::size_t>(i)] - x;

  int start = 0;
  for (int i = 1; i < k; ++i)
    if (pts[i].squaredNorm() < pts[start].squaredNorm()) start = i;

  std::vector<int> corral{start};
  std::vector<double> weights{1.0};
  Eigen::VectorXd z = pts[start];

  auto affine_min_norm = [&](const std::vector<int>& idx) -> Eigen::VectorXd {
    const int m = static_cast<int>(idx.size());
    Eigen::MatrixXd kkt(m + 1, m + 1);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) kkt(i, j) = 2.0 * pts[idx[i]].dot(pts[idx[j]]);
    for (int i = 0; i < m; ++i) {
      kkt(i, m) = 1.0;
      kkt(m, i) = 1.0;
    }
    kkt(m, m) = 0.0;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
    rhs[m] = 1.0;
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    return sol.head(m);
  };

  for (int outer = 0; outer < 16 * k + 64; ++outer) {
    // linear minimization over all points against the current iterate
    int best = 0;
    double best_val = z.dot(pts[0]);
    for (int i = 1; i < k; ++i) {
      const double val = z.dot(pts[i]);
      if (val < best_val) {
        best_val = val;
        best = i;
      }
    }
    const double zz = z.squaredNorm();
    if (best_val >= zz - 1e-14 * (1.0 + zz)) break;  // optimal
    if (std::find(corral.begin(), corral.end(), best) == corral.end()) {
      corral.push_back(best);
      weights.push_back(0.0);
    }

    // inner loop: pull the affine minimizer back into the simplex
    for (int inner = 0; inner < 4 * k + 16; ++inner) {
      const Eigen::VectorXd alpha = affine_min_norm(corral);
      bool feasible = true;
      for (int i = 0; i < alpha.size(); ++i)
        if (alpha[i] < 1e-12) feasible = false;
      if (feasible) {
        weights.assign(alpha.data(), alpha.data() + alpha.size());
        break;
      }
      double step = 1.0;
      for (int i = 0; i < alpha.size(); ++i) {
        if (alpha[i] < 1e-12) {
          const double denom = weights[static_cast<std::size_t>(i)] - alpha[i];
          if (denom > 1e-300)
            step = std::min(step, weights[static_cast<std::size_t>(i)] / denom);
        }
      }
      std::vector<int> next_corral;
      std::vector<double> next_weights;
      for (int i = 0; i < alpha.size(); ++i) {
        const double wi =
            (1.0 - step) * weights[static_cast<std::size_t>(i)] + step * alpha[i];
        if (wi > 1e-12) {
          next_corral.push_back(corral[static_cast<std::size_t>(i)]);
          next_weights.push_back(wi);
        }
      }
      if (next_corral.empty()) {
        next_corral.push_back(corral.front());
        next_weights.push_back(1.0);
      }
      corral = std::move(next_corral);
      weights = std::move(next_weights);
    }

    z.setZero();
    for (std::size_t i = 0; i < corral.size(); ++i)
      z += weights[i] * pts[static_cast<std::size_t>(corral[i])];
  }
  return z.norm();
}

}  // namespace

double DecisionSet::hull_distance(const Eigen::VectorXd& x) const {
  return min_norm_point_distance(vertices_, x);
}

bool DecisionSet::contains(const Eigen::VectorXd& x, double tol) const {
  if (static_cast<int>(x.size()) != dim_) return false;
  switch (kind_) {
    case DecisionSetKind::UnitL2Ball:
      return x.norm() <= 1.0 + tol;
    case DecisionSetKind::Hypercube: {
      const double h = 1.0 / std::sqrt(static_cast<double>(dim_));
      return x.lpNorm<Eigen::Infinity>() <= h + tol;
    }
    case DecisionSetKind::Polytope:
      return hull_distance(x) <= tol;
  }
  return false;
}

Eigen::VectorXd DecisionSet::uniform_sample(SplitMix64& rng) const {
  switch (kind_) {
    case DecisionSetKind::UnitL2Ball:
      return ball_uniform(dim_, rng);
    case DecisionSetKind::Hypercube: {
      const double h = 1.0 / std::sqrt(static_cast<double>(dim_));
      Eigen::VectorXd x(dim_);
      for (int i = 0; i < dim_; ++i) x[i] = (2.0 * uniform01(rng) - 1.0) * h;
      return x;
    }
    case DecisionSetKind::Polytope: {
      for (int attempt = 0; attempt < 1000000; ++attempt) {
        const Eigen::VectorXd cand =
            centroid_ + bounding_radius_ * ball_uniform(dim_, rng);
        if (contains(cand, 1e-12)) return cand;
      }
      throw std::runtime_error("polytope uniform sampling: rejection budget exhausted");
    }
  }
  return Eigen::VectorXd::Zero(dim_);
}

std::optional<double> DecisionSet::gap(const Eigen::VectorXd& theta_star) const {
  if (static_cast<int>(theta_star.size()) != dim_)
    throw InputError("gap: dimension mismatch");
  switch (kind_) {
    case DecisionSetKind::UnitL2Ball:
      return std::nullopt;  // continuum of extremal points
    case DecisionSetKind::Hypercube: {
      const double h = 1.0 / std::sqrt(static_cast<double>(dim_));
      double smallest = std::numeric_limits<double>::infinity();
      for (int i = 0; i < dim_; ++i) smallest = std::min(smallest, std::abs(theta_star[i]));
      return 2.0 * h * smallest;
    }
    case DecisionSetKind::Polytope: {
      if (vertices_.size() < 2) return std::nullopt;
      double best = std::numeric_limits<double>::infinity();
      double second = std::numeric_limits<double>::infinity();
      int best_count = 0;
      for (const auto& v : vertices_) {
        const double val = theta_star.dot(v);
        if (val < best) {
          second = best;
          best = val;
          best_count = 1;
        } else if (val == best) {
          ++best_count;
        } else {
          second = std::min(second, val);
        }
      }
      if (best_count >= 2) return 0.0;
      return second - best;
    }
  }
  return std::nullopt;
}

nlohmann::json DecisionSet::to_json() const {
  nlohmann::json j;
  j["p"] = dim_;
  switch (kind_) {
    case DecisionSetKind::UnitL2Ball: j["kind"] = "ball"; break;
    case DecisionSetKind::Hypercube: j["kind"] = "cube"; break;
    case DecisionSetKind::Polytope: {
      j["kind"] = "polytope";
      nlohmann::json verts = nlohmann::json::array();
      for (const auto& v : vertices_)
        verts.push_back(std::vector<double>(v.data(), v.data() + v.size()));
      j["vertices"] = verts;
      break;
    }
  }
  return j;
}

DecisionSet DecisionSet::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ball") return unit_ball(j.at("p").get<int>());
  if (kind == "cube") return hypercube(j.at("p").get<int>());
  if (kind == "polytope") {
    std::vector<Eigen::VectorXd> verts;
    for (const auto& row : j.at("vertices")) {
      const auto vals = row.get<std::vector<double>>();
      verts.push_back(Eigen::Map<const Eigen::VectorXd>(vals.data(),
                                                        static_cast<long>(vals.size())));
    }
    return polytope(std::move(verts));
  }
  throw InputError("unknown decision set kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Environment

double Environment::draw_noise(SplitMix64& rng) const {
  switch (noise_kind) {
    case NoiseKind::Uniform:
      return (2.0 * uniform01(rng) - 1.0) * noise_bound;
    case NoiseKind::Rademacher:
      return (rng() & 1u) ? noise_bound : -noise_bound;
    case NoiseKind::Zero:
      return 0.0;
  }
  return 0.0;
}

Eigen::VectorXd make_structured_theta(const StructureModel& model, std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, 0x7e7a));
  const int p = model.dim();
  switch (model.kind()) {
    case NormKind::L2:
      return sphere_uniform(p, rng);
    case NormKind::L1: {
      const int s = model.structure_size();
      std::vector<int> idx(p);
      for (int i = 0; i < p; ++i) idx[i] = i;
      for (int i = 0; i < s; ++i) {
        const int j = i + static_cast<int>(rng() % static_cast<std::uint64_t>(p - i));
        std::swap(idx[i], idx[j]);
      }
      Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
      const double mag = 1.0 / std::sqrt(static_cast<double>(s));
      for (int i = 0; i < s; ++i) theta[idx[i]] = (rng() & 1u) ? mag : -mag;
      return theta;
    }
    case NormKind::GroupL12: {
      const int sg = model.structure_size();
      const int K = static_cast<int>(model.groups().size());
      std::vector<int> idx(K);
      for (int i = 0; i < K; ++i) idx[i] = i;
      for (int i = 0; i < sg; ++i) {
        const int j = i + static_cast<int>(rng() % static_cast<std::uint64_t>(K - i));
        std::swap(idx[i], idx[j]);
      }
      Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
      const double group_norm = 1.0 / std::sqrt(static_cast<double>(sg));
      for (int i = 0; i < sg; ++i) {
        const auto& g = model.groups()[static_cast<std::size_t>(idx[i])];
        Eigen::VectorXd vals(static_cast<long>(g.size()));
        for (long k = 0; k < vals.size(); ++k) vals[k] = standard_normal(rng);
        vals *= group_norm / std::max(vals.norm(), 1e-300);
        for (std::size_t k = 0; k < g.size(); ++k) theta[g[k]] = vals[static_cast<long>(k)];
      }
      return theta;
    }
    case NormKind::Nuclear: {
      const int d = model.rows(), q = model.cols(), r = model.structure_size();
      Eigen::MatrixXd A(d, r), B(q, r);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < r; ++j) A(i, j) = standard_normal(rng);
      for (int i = 0; i < q; ++i)
        for (int j = 0; j < r; ++j) B(i, j) = standard_normal(rng);
      const Eigen::MatrixXd U = Eigen::HouseholderQR<Eigen::MatrixXd>(A)
                                    .householderQ() *
                                Eigen::MatrixXd::Identity(d, r);
      const Eigen::MatrixXd V = Eigen::HouseholderQR<Eigen::MatrixXd>(B)
                                    .householderQ() *
                                Eigen::MatrixXd::Identity(q, r);
      Eigen::MatrixXd M = U * V.transpose();
      M /= M.norm();  // unit Frobenius norm
      Eigen::VectorXd theta(p);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < q; ++j) theta[i * q + j] = M(i, j);
      return theta;
    }
  }
  return Eigen::VectorXd::Zero(p);
}

// ---------------------------------------------------------------------------
// Schedule

nlohmann::json ScheduleParams::to_json() const {
  return {{"T", horizon},
          {"epsilon", epsilon},
          {"gamma", gamma},
          {"burnin_const", burnin_const},
          {"lambda_const", lambda_const},
          {"radius_const", radius_const},
          {"arm_bound", arm_bound},
          {"cap_width", cap_width},
          {"omega_width", omega_width},
          {"omega_diameter", omega_diameter},
          {"psi", psi}};
}

long burnin_rounds(double burnin_const, double cap_width, double epsilon,
                   double log_horizon) {
  return static_cast<long>(
      std::ceil(burnin_const * cap_width * cap_width *
                (epsilon * epsilon + log_horizon)));
}

Schedule compute_schedule(const ScheduleParams& params) {
  if (params.horizon < 2) throw InputError("schedule: horizon must be at least 2");
  if (!(params.cap_width > 0.0) || !(params.omega_width > 0.0) || !(params.psi > 0.0))
    throw InputError("schedule: widths and psi must be positive");

  const double logT = std::log(static_cast<double>(params.horizon));
  const long burnin =
      burnin_rounds(params.burnin_const, params.cap_width, params.epsilon, logT);

  if (burnin >= params.horizon) {
    // smallest T with ceil(c * (eps^2 + ln T)) < T, by fixed-point iteration
    const double c = params.burnin_const * params.cap_width * params.cap_width;
    long feasible = std::max<long>(2, burnin + 1);
    for (int i = 0; i < 500; ++i) {
      const double need =
          std::ceil(c * (params.epsilon * params.epsilon + std::log(static_cast<double>(feasible)))) + 1.0;
      if (need > 1e15) {
        feasible = -1;
        break;
      }
      if (static_cast<long>(need) <= feasible) break;
      feasible = static_cast<long>(need);
    }
    throw ScheduleInfeasibleError(
        "schedule: burn-in length " + std::to_string(burnin) + " >= horizon " +
            std::to_string(params.horizon) + "; smallest feasible horizon is " +
            std::to_string(feasible),
        feasible);
  }

  const double tail = std::sqrt(params.gamma * params.gamma + logT) * params.omega_diameter / 2.0;
  Schedule s;
  s.burnin = static_cast<int>(burnin);
  s.lambda_scale = params.lambda_const * (params.omega_width + tail);
  s.beta = params.radius_const * params.psi * (params.omega_width + tail);
  return s;
}

// ---------------------------------------------------------------------------
// ConfidenceEllipsoid

ConfidenceEllipsoid::ConfidenceEllipsoid(Eigen::VectorXd center, const Eigen::MatrixXd& shape,
                                         double radius)
    : center_(std::move(center)), radius_(radius) {
  const int p = static_cast<int>(shape.rows());
  if (shape.cols() != p || center_.size() != p)
    throw InputError("ellipsoid: shape must be square and match the center");
  if (radius_ < 0.0) throw InputError("ellipsoid: radius must be non-negative");
  double jitter = 1e-9 * (1.0 + shape.trace() / static_cast<double>(p));
  for (int attempt = 0; attempt < 8; ++attempt) {
    shape_jittered_ = shape;
    shape_jittered_.diagonal().array() += jitter;
    chol_.compute(shape_jittered_);
    if (chol_.info() == Eigen::Success) return;
    jitter *= 10.0;
  }
  throw std::runtime_error("ellipsoid: covariance not factorizable");
}

double ConfidenceEllipsoid::mahalanobis(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd d = theta - center_;
  return std::sqrt(std::max(0.0, d.dot(shape_jittered_ * d)));
}

bool ConfidenceEllipsoid::contains(const Eigen::VectorXd& theta) const {
  return mahalanobis(theta) <= radius_ + 1e-12 * (1.0 + radius_);
}

Eigen::VectorXd ConfidenceEllipsoid::support_minimizer(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd w = chol_.solve(x);
  const double denom = std::sqrt(std::max(0.0, x.dot(w)));
  if (denom < 1e-300) return center_;
  return center_ - (radius_ / denom) * w;
}

// ---------------------------------------------------------------------------
// Arm selection

ArmSelection select_arm_optimistic(const ConfidenceEllipsoid& ellipsoid,
                                   const DecisionSet& set, int iters) {
  if (iters < 1) throw InputError("select_arm_optimistic: iters must be positive");

  ArmSelection best;
  best.value = std::numeric_limits<double>::infinity();
  best.degenerate = true;

  DecisionSet::OracleResult step = set.linear_min(ellipsoid.center());
  Eigen::VectorXd x = step.x;
  bool sphere_rejected_any = false;
  double prev = std::numeric_limits<double>::infinity();

  for (int k = 0; k < iters; ++k) {
    if (x.norm() < 1e-300) break;
    Eigen::VectorXd theta = ellipsoid.support_minimizer(x);
    const double nrm = theta.norm();
    if (nrm > 1e-300) {
      const Eigen::VectorXd projected = theta / nrm;
      if (ellipsoid.contains(projected)) {
        theta = projected;
      } else {
        sphere_rejected_any = true;
      }
    } else {
      sphere_rejected_any = true;
    }
    step = set.linear_min(theta);
    if (step.degenerate) break;
    x = step.x;
    const double value = x.dot(theta);
    if (value < best.value) {
      best.x = x;
      best.theta = theta;
      best.value = value;
      best.degenerate = false;
    }
    if (std::abs(prev - value) < 1e-10) break;
    prev = value;
  }

  best.sphere_rejected = sphere_rejected_any;
  if (!best.degenerate && best.x.norm() < 1e-300) best.degenerate = true;
  return best;
}

PerturbedArm perturb_and_play(const Eigen::VectorXd& x_opt, const DecisionSet& set,
                              std::uint64_t seed) {
  const double nrm = x_opt.norm();
  if (nrm < 1e-300) throw DegenerateArmError("perturb_and_play: x' must be non-zero");
  if (!set.contains(x_opt, 1e-9))
    throw InputError("perturb_and_play: x' must belong to the decision set");
  // played arms satisfy the tight membership tolerance by construction
  const double radius = nrm / 2.0;
  const int p = static_cast<int>(x_opt.size());

  for (std::uint64_t i = 0; i < 10000; ++i) {
    SplitMix64 rng(derive_seed(seed, 0x9e27, i));
    const Eigen::VectorXd cand = x_opt + radius * ball_uniform(p, rng);
    if (set.contains(cand, 1e-12)) return {cand, false};
  }

  // Explicit construction: shrink a random ball vector until the perturbed
  // point is a member again.
  SplitMix64 rng(derive_seed(seed, 0xfa11));
  Eigen::VectorXd v = ball_uniform(p, rng);
  for (int halvings = 0; halvings < 200; ++halvings) {
    const Eigen::VectorXd cand = x_opt + radius * v;
    if (set.contains(cand, 1e-12)) return {cand, true};
    v *= 0.5;
  }
  return {x_opt, true};
}

Eigen::VectorXd certificate_theta(const Eigen::VectorXd& x_opt,
                                  const Eigen::VectorXd& theta_opt) {
  const double nrm = x_opt.norm();
  if (nrm < 1e-300) throw DegenerateArmError("certificate_theta: x' must be non-zero");
  if (x_opt.size() != theta_opt.size())
    throw InputError("certificate_theta: dimension mismatch");
  return theta_opt - x_opt / nrm;
}

// ---------------------------------------------------------------------------
// AlgorithmState

void AlgorithmState::append(const Eigen::VectorXd& x, double loss) {
  design.row(t) = x.transpose();
  responses[t] = loss;
  covariance.noalias() += x * x.transpose();
  xty.noalias() += loss * x;
  yty += loss * loss;
  ++t;
}

double AlgorithmState::covariance_drift() const {
  const Eigen::MatrixXd head = design.topRows(t);
  return (covariance - head.transpose() * head).norm();
}

// ---------------------------------------------------------------------------
// RegretTrace

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void RegretTrace::write_csv(std::ostream& os) const {
  os << "round,regret,cum_regret,lambda,contained,deviation_flags\n";
  for (const auto& row : rows) {
    os << row.round << ',' << format_double(row.regret) << ','
       << format_double(row.cum_regret) << ',' << format_double(row.lambda) << ','
       << (row.contained ? 1 : 0) << ',' << row.flags << '\n';
  }
}

RegretTrace RegretTrace::read_csv(std::istream& is) {
  RegretTrace trace;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    RegretTraceRow row;
    std::istringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    row.round = std::stoi(field);
    std::getline(ss, field, ',');
    row.regret = std::strtod(field.c_str(), nullptr);
    std::getline(ss, field, ',');
    row.cum_regret = std::strtod(field.c_str(), nullptr);
    std::getline(ss, field, ',');
    row.lambda = std::strtod(field.c_str(), nullptr);
    std::getline(ss, field, ',');
    row.contained = field == "1";
    std::getline(ss, field, ',');
    row.flags = static_cast<unsigned>(std::stoul(field));
    trace.rows.push_back(row);
  }
  if (!trace.rows.empty()) trace.total_regret = trace.rows.back().cum_regret;
  return trace;
}

// ---------------------------------------------------------------------------
// run_episode

RegretTrace run_episode(const Environment& env, const DecisionSet& set,
                        const StructureModel& model, const ScheduleParams& params,
                        const SolverConfig& solver, std::uint64_t seed,
                        const EpisodeOptions& options) {
  const int p = model.dim();
  if (set.dim() != p || env.theta_star.size() != p)
    throw InputError("run_episode: dimension mismatch between model, set, and theta_star");
  if (std::abs(env.theta_star.norm() - 1.0) > 1e-6)
    throw InputError("run_episode: theta_star must have unit L2 norm");

  const Schedule schedule = compute_schedule(params);
  const int T = params.horizon;
  const int n = schedule.burnin;

  const auto opt = set.linear_min(env.theta_star);
  const double optimal_value = opt.value;

  RegretTrace trace;
  trace.rows.reserve(static_cast<std::size_t>(T));
  trace.burnin = n;
  trace.beta = schedule.beta;
  trace.optimal_value = optimal_value;
  trace.gap = set.gap(env.theta_star);

  trace.arms = Eigen::MatrixXd::Zero(T, p);

  AlgorithmState state;
  state.design = Eigen::MatrixXd::Zero(T, p);
  state.responses = Eigen::VectorXd::Zero(T);
  state.covariance = Eigen::MatrixXd::Zero(p, p);
  state.xty = Eigen::VectorXd::Zero(p);
  state.beta = schedule.beta;

  const std::uint64_t base = derive_seed(seed, 0xe5150de ^ env.rng_salt);
  SplitMix64 noise_rng(derive_seed(base, 1));
  SplitMix64 arm_rng(derive_seed(base, 2));

  double cum = 0.0;

  // burn-in: uniform i.i.d. draws from the decision set
  for (int t = 1; t <= n; ++t) {
    const Eigen::VectorXd x = set.uniform_sample(arm_rng);
    const double loss = x.dot(env.theta_star) + env.draw_noise(noise_rng);
    trace.arms.row(t - 1) = x.transpose();
    state.append(x, loss);
    const double regret = x.dot(env.theta_star) - optimal_value;
    cum += regret;
    trace.rows.push_back({t, regret, cum, 0.0, false, 0});
  }

  if (options.record_kappa_at_burnin) {
    CapSampler sampler(ErrorSetSpec{model, env.theta_star});
    trace.kappa_at_burnin =
        estimate_restricted_eigenvalue(state.design.topRows(n), sampler,
                                       options.kappa_directions, derive_seed(base, 4))
            .kappa_hat;
  }

  Eigen::VectorXd warm = Eigen::VectorXd::Zero(p);
  int contained_count = 0;
  double lambda_sum = 0.0;

  for (int t = n; t < T; ++t) {
    const double lambda = schedule.lambda(t);
    state.lambda = lambda;

    Estimate est;
    if (model.kind() == NormKind::L2) {
      est = solve_ridge_gram(state.covariance, state.xty, state.yty, t, lambda);
    } else {
      est = solve_prox_grad_gram(state.covariance, state.xty, state.yty, t, lambda, model,
                                 solver, &warm);
    }
    warm = est.theta_hat;
    state.theta_hat = est.theta_hat;

    unsigned flags = 0;
    if (!est.converged) {
      flags |= kFlagSolverNotConverged;
      ++trace.solver_failures;
    }

    ConfidenceEllipsoid ellipsoid(est.theta_hat, state.covariance, schedule.beta);
    const bool contained = ellipsoid.contains(env.theta_star);
    if (contained) ++contained_count;

    const ArmSelection sel = select_arm_optimistic(ellipsoid, set, options.alternation_iters);

    Eigen::VectorXd played;
    if (sel.degenerate) {
      flags |= kFlagDegenerateArm;
      ++trace.degenerate_arms;
      played = set.uniform_sample(arm_rng);
    } else {
      if (sel.sphere_rejected) {
        flags |= kFlagSphereRejected;
        ++trace.sphere_rejections;
      }
      const PerturbedArm pa = perturb_and_play(sel.x, set, derive_seed(base, 3, t));
      if (pa.fallback_used) {
        flags |= kFlagPerturbFallback;
        ++trace.perturb_fallbacks;
      }
      played = pa.x;
      if (options.debug_checks && contained) {
        const Eigen::VectorXd cert = certificate_theta(sel.x, sel.theta);
        if (played.dot(cert) >
            optimal_value + 1e-12 * (1.0 + std::abs(optimal_value))) {
          flags |= kFlagOptimismViolated;
          ++trace.optimism_violations;
        }
      }
    }

    const double loss = played.dot(env.theta_star) + env.draw_noise(noise_rng);
    trace.arms.row(t) = played.transpose();
    state.append(played, loss);

    const double regret = played.dot(env.theta_star) - optimal_value;
    cum += regret;
    lambda_sum += lambda;
    trace.rows.push_back({t + 1, regret, cum, lambda, contained, flags});

    if (options.debug_checks && state.t % 100 == 0) {
      if (state.covariance_drift() > 1e-8)
        throw std::logic_error("run_episode: covariance drifted from X^T X");
    }
  }

  trace.total_regret = cum;
  const int optimistic_rounds = T - n;
  trace.containment_rate =
      optimistic_rounds > 0 ? static_cast<double>(contained_count) / optimistic_rounds : 0.0;
  trace.mean_lambda = optimistic_rounds > 0 ? lambda_sum / optimistic_rounds : 0.0;
  trace.healthy = trace.solver_failures <= 0.01 * optimistic_rounds;
  return trace;
}

}  // namespace structbandit
