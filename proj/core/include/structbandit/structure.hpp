#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace structbandit {

/// Thrown when a vector has the wrong length for a model, or when a model
/// is constructed with inconsistent metadata.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a model is missing configuration a query needs (e.g. the
/// structure size for a compatibility constant).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NormKind { L2, L1, GroupL12, Nuclear };

std::string to_string(NormKind kind);

/// One of the four regularizer structures: plain L2 (ridge), L1 (sparse),
/// group-L2 over a disjoint partition (group sparse), or nuclear norm over
/// a flattened matrix (low rank).
///
/// Matrix parameters for the nuclear kind are stored flattened row-major
/// with (rows, cols) metadata; the trace inner product is then the plain
/// dot product on the flat vectors, so a single vector code path serves
/// all four kinds.
///
/// Geometry (norm, dual norm, unit ball) always uses the plain norm, also
/// for the ridge kind. The ridge *solver penalty* squares the L2 norm; see
/// penalty().
class StructureModel {
 public:
  static StructureModel l2(int dim);
  static StructureModel l1(int dim, int sparsity);
  static StructureModel group_l12(int dim, std::vector<std::vector<int>> groups,
                                  int active_groups);
  static StructureModel nuclear(int rows, int cols, int rank);

  NormKind kind() const { return kind_; }
  int dim() const { return dim_; }

  /// Sparsity s, active group count, or rank; 0 for the L2 kind.
  int structure_size() const { return structure_size_; }

  const std::vector<std::vector<int>>& groups() const { return groups_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

  /// R(u). Absolutely homogeneous and subadditive for every kind (the L2
  /// kind reports the unsquared norm here).
  double norm(const Eigen::VectorXd& u) const;

  /// Dual norm R*(v) = sup_{R(u) <= 1} <v, u>.
  double dual_norm(const Eigen::VectorXd& v) const;

  /// argmin_u 0.5*||u - v||^2 + tau * penalty(u). Soft-thresholding for L1,
  /// block soft-thresholding for groups, singular value thresholding for
  /// nuclear, and v/(1+2*tau) for the squared-L2 ridge penalty.
  Eigen::VectorXd prox(const Eigen::VectorXd& v, double tau) const;

  /// Solver penalty: R(u) for L1/GroupL12/Nuclear, ||u||_2^2 for the ridge
  /// kind (the estimator penalizes the square there).
  double penalty(const Eigen::VectorXd& u) const;

  /// Norm compatibility constant psi: sqrt(s), sqrt(s_G), sqrt(r), or 1 for
  /// L2; overridable since the theory only pins it up to a constant.
  double compat_constant() const;
  void set_psi_override(double psi);

  /// phi(Omega_R) = sup_{R(u)<=1} ||u||_2. Equal to 1 for all four kinds.
  double omega_diameter() const { return 1.0; }

  nlohmann::json to_json() const;
  static StructureModel from_json(const nlohmann::json& j);

  bool operator==(const StructureModel& other) const;

 private:
  StructureModel() = default;
  void check_dim(const Eigen::VectorXd& u) const;

  NormKind kind_ = NormKind::L2;
  int dim_ = 0;
  int structure_size_ = 0;
  std::vector<std::vector<int>> groups_;
  int rows_ = 0, cols_ = 0;
  std::optional<double> psi_override_;
};

}  // namespace structbandit
