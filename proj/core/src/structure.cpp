#include "structbandit/structure.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace structbandit {

std::string to_string(NormKind kind) {
  switch (kind) {
    case NormKind::L2: return "l2";
    case NormKind::L1: return "l1";
    case NormKind::GroupL12: return "group";
    case NormKind::Nuclear: return "nuclear";
  }
  return "?";
}

StructureModel StructureModel::l2(int dim) {
  if (dim < 1) throw InputError("l2: dim must be positive");
  StructureModel m;
  m.kind_ = NormKind::L2;
  m.dim_ = dim;
  return m;
}

StructureModel StructureModel::l1(int dim, int sparsity) {
  if (dim < 1) throw InputError("l1: dim must be positive");
  if (sparsity < 1 || sparsity > dim) throw InputError("l1: sparsity must be in [1, dim]");
  StructureModel m;
  m.kind_ = NormKind::L1;
  m.dim_ = dim;
  m.structure_size_ = sparsity;
  return m;
}

StructureModel StructureModel::group_l12(int dim, std::vector<std::vector<int>> groups,
                                         int active_groups) {
  if (dim < 1) throw InputError("group_l12: dim must be positive");
  if (groups.empty()) throw InputError("group_l12: at least one group required");
  if (active_groups < 1 || active_groups > static_cast<int>(groups.size()))
    throw InputError("group_l12: active_groups must be in [1, #groups]");
  std::vector<char> seen(dim, 0);
  for (const auto& g : groups) {
    if (g.empty())
      throw InputError("group_l12: groups must be non-empty and partition {0..p-1}");
    for (int idx : g) {
      if (idx < 0 || idx >= dim || seen[idx])
        throw InputError("group_l12: groups must be disjoint and partition {0..p-1}");
      seen[idx] = 1;
    }
  }
  if (std::count(seen.begin(), seen.end(), 1) != dim)
    throw InputError("group_l12: groups must partition {0..p-1} (uncovered index)");
  StructureModel m;
  m.kind_ = NormKind::GroupL12;
  m.dim_ = dim;
  m.structure_size_ = active_groups;
  m.groups_ = std::move(groups);
  return m;
}

StructureModel StructureModel::nuclear(int rows, int cols, int rank) {
  if (rows < 1 || cols < 1) throw InputError("nuclear: shape must be positive");
  if (rank < 1 || rank > std::min(rows, cols))
    throw InputError("nuclear: rank must be in [1, min(rows, cols)]");
  StructureModel m;
  m.kind_ = NormKind::Nuclear;
  m.dim_ = rows * cols;
  m.structure_size_ = rank;
  m.rows_ = rows;
  m.cols_ = cols;
  return m;
}

void StructureModel::check_dim(const Eigen::VectorXd& u) const {
  if (u.size() != dim_)
    throw InputError("dimension mismatch: expected " + std::to_string(dim_) + ", got " +
                     std::to_string(u.size()));
}

namespace {

Eigen::MatrixXd reshape_rowmajor(const Eigen::VectorXd& u, int rows, int cols) {
  Eigen::MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = u[i * cols + j];
  return M;
}

Eigen::VectorXd flatten_rowmajor(const Eigen::MatrixXd& M) {
  Eigen::VectorXd u(M.rows() * M.cols());
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j) u[i * M.cols() + j] = M(i, j);
  return u;
}

}  // namespace

double StructureModel::norm(const Eigen::VectorXd& u) const {
  check_dim(u);
  switch (kind_) {
    case NormKind::L2:
      return u.norm();
    case NormKind::L1:
      return u.lpNorm<1>();
    case NormKind::GroupL12: {
      double s = 0.0;
      for (const auto& g : groups_) {
        double sq = 0.0;
        for (int idx : g) sq += u[idx] * u[idx];
        s += std::sqrt(sq);
      }
      return s;
    }
    case NormKind::Nuclear: {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(reshape_rowmajor(u, rows_, cols_));
      return svd.singularValues().sum();
    }
  }
  return 0.0;
}

double StructureModel::dual_norm(const Eigen::VectorXd& v) const {
  check_dim(v);
  switch (kind_) {
    case NormKind::L2:
      return v.norm();
    case NormKind::L1:
      return v.lpNorm<Eigen::Infinity>();
    case NormKind::GroupL12: {
      double best = 0.0;
      for (const auto& g : groups_) {
        double sq = 0.0;
        for (int idx : g) sq += v[idx] * v[idx];
        best = std::max(best, std::sqrt(sq));
      }
      return best;
    }
    case NormKind::Nuclear: {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(reshape_rowmajor(v, rows_, cols_));
      return svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
    }
  }
  return 0.0;
}

Eigen::VectorXd StructureModel::prox(const Eigen::VectorXd& v, double tau) const {
  check_dim(v);
  if (!(tau > 0.0)) throw InputError("prox: tau must be positive");
  switch (kind_) {
    case NormKind::L2:
      // prox of tau*||u||_2^2 (squared ridge penalty)
      return v / (1.0 + 2.0 * tau);
    case NormKind::L1: {
      Eigen::VectorXd out(dim_);
      for (int i = 0; i < dim_; ++i) {
        const double a = std::abs(v[i]) - tau;
        out[i] = a > 0.0 ? (v[i] > 0.0 ? a : -a) : 0.0;
      }
      return out;
    }
    case NormKind::GroupL12: {
      Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
      for (const auto& g : groups_) {
        double sq = 0.0;
        for (int idx : g) sq += v[idx] * v[idx];
        const double nrm = std::sqrt(sq);
        if (nrm > tau) {
          const double scale = 1.0 - tau / nrm;
          for (int idx : g) out[idx] = scale * v[idx];
        }
      }
      return out;
    }
    case NormKind::Nuclear: {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(reshape_rowmajor(v, rows_, cols_),
                                            Eigen::ComputeThinU | Eigen::ComputeThinV);
      Eigen::VectorXd sv = svd.singularValues();
      for (int i = 0; i < sv.size(); ++i) sv[i] = std::max(0.0, sv[i] - tau);
      return flatten_rowmajor(svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose());
    }
  }
  return v;
}

double StructureModel::penalty(const Eigen::VectorXd& u) const {
  if (kind_ == NormKind::L2) {
    check_dim(u);
    return u.squaredNorm();
  }
  return norm(u);
}

double StructureModel::compat_constant() const {
  if (psi_override_) return *psi_override_;
  if (kind_ == NormKind::L2) return 1.0;
  if (structure_size_ < 1)
    throw ConfigError("compat_constant: structure_size missing for structured kind");
  return std::sqrt(static_cast<double>(structure_size_));
}

void StructureModel::set_psi_override(double psi) {
  if (!(psi > 0.0)) throw InputError("psi override must be positive");
  psi_override_ = psi;
}

nlohmann::json StructureModel::to_json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind_);
  j["p"] = dim_;
  if (kind_ == NormKind::L1) j["s"] = structure_size_;
  if (kind_ == NormKind::GroupL12) {
    j["s"] = structure_size_;
    j["groups"] = groups_;
  }
  if (kind_ == NormKind::Nuclear) {
    j["s"] = structure_size_;
    j["shape"] = {rows_, cols_};
  }
  if (psi_override_) j["psi"] = *psi_override_;
  return j;
}

StructureModel StructureModel::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const int p = j.at("p").get<int>();
  StructureModel m;
  if (kind == "l2") {
    m = l2(p);
  } else if (kind == "l1") {
    m = l1(p, j.at("s").get<int>());
  } else if (kind == "group") {
    m = group_l12(p, j.at("groups").get<std::vector<std::vector<int>>>(),
                  j.at("s").get<int>());
  } else if (kind == "nuclear") {
    const auto shape = j.at("shape").get<std::vector<int>>();
    if (shape.size() != 2) throw InputError("nuclear: shape must be [rows, cols]");
    if (shape[0] * shape[1] != p)
      throw InputError("nuclear: rows*cols must equal p");
    m = nuclear(shape[0], shape[1], j.at("s").get<int>());
  } else {
    throw InputError("unknown structure kind '" + kind + "'");
  }
  if (j.contains("psi")) m.set_psi_override(j.at("psi").get<double>());
  return m;
}

bool StructureModel::operator==(const StructureModel& other) const {
  return kind_ == other.kind_ && dim_ == other.dim_ &&
         structure_size_ == other.structure_size_ && groups_ == other.groups_ &&
         rows_ == other.rows_ && cols_ == other.cols_ &&
         psi_override_ == other.psi_override_;
}

}  // namespace structbandit
