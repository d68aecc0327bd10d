#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "itc/tensor.hpp"

namespace itc {

inline constexpr double kDefaultRankTol = 1e-10;

/// Orthonormal basis of the span of the mode-j fibers of a tensor.
struct SubspaceBasis {
  std::size_t mode = 0;
  Eigen::MatrixXd basis;       // d_j x r_j, orthonormal columns
  Eigen::MatrixXd complement;  // d_j x (d_j - r_j), orthonormal columns
  Eigen::VectorXd singular_values;

  std::size_t rank() const { return static_cast<std::size_t>(basis.cols()); }
  std::size_t dim() const { return static_cast<std::size_t>(basis.rows()); }
  Eigen::MatrixXd projector() const { return basis * basis.transpose(); }
};

/// Left singular vectors of unfold(x, mode) with singular value above
/// rank_tol * sigma_max. Throws on the zero tensor.
SubspaceBasis mode_subspace(const DenseTensor& x, std::size_t mode,
                            double rank_tol = kDefaultRankTol);

/// Builds a basis directly from a d x r matrix with orthonormal columns.
SubspaceBasis basis_from_columns(std::size_t mode, const Eigen::MatrixXd& cols);

std::vector<std::size_t> tucker_ranks(const DenseTensor& x,
                                      double rank_tol = kDefaultRankTol);

/// (d/r) max_i ||P e_i||^2, in [1, d/r].
double coherence(const SubspaceBasis& b);

/// max_{||u||_2 <= 1} ||P u||_inf = max_i ||P e_i||_2.
double mode_infty_bound(const SubspaceBasis& b);

/// Which orthogonal projection to apply.
struct Projection {
  enum class Kind { Q0, Q, Qperp, QperpPair };
  Kind kind = Kind::Q0;
  std::size_t j1 = 0;  // only for QperpPair, 0-based, j1 < j2
  std::size_t j2 = 0;

  static Projection q0() { return {Kind::Q0, 0, 0}; }
  static Projection q() { return {Kind::Q, 0, 0}; }
  static Projection qperp() { return {Kind::Qperp, 0, 0}; }
  static Projection qperp_pair(std::size_t a, std::size_t b) {
    return {Kind::QperpPair, a, b};
  }
};

/// Per-mode subspaces of a reference tensor and the projectors built from
/// them. Projections are applied mode by mode.
class ProjectorStack {
 public:
  explicit ProjectorStack(const DenseTensor& reference,
                          double rank_tol = kDefaultRankTol);
  explicit ProjectorStack(std::vector<SubspaceBasis> bases);

  std::size_t order() const { return bases_.size(); }
  const Dims& dims() const { return dims_; }
  const SubspaceBasis& basis(std::size_t j) const { return bases_.at(j); }
  const Eigen::MatrixXd& projector(std::size_t j) const { return p_.at(j); }
  const Eigen::MatrixXd& complement_projector(std::size_t j) const {
    return pperp_.at(j);
  }
  std::vector<std::size_t> ranks() const;

  DenseTensor project(const DenseTensor& w, const Projection& which) const;

  /// Dimension of range(Q): prod r + sum_j (d_j - r_j) prod_{l != j} r_l.
  std::size_t tangent_dimension() const;

  /// Orthonormal basis of range(Q) as columns of a (prod d) x dim matrix,
  /// each column a row-major vectorized tensor.
  Eigen::MatrixXd tangent_basis() const;

  /// ||Q(e_omega)||_HS^2 for the basis tensor at multi-index omega.
  double tangent_leverage(const MultiIndex& omega) const;

 private:
  DenseTensor apply_chain(const DenseTensor& w,
                          const std::vector<const Eigen::MatrixXd*>& ops) const;

  Dims dims_;
  std::vector<SubspaceBasis> bases_;
  std::vector<Eigen::MatrixXd> p_;
  std::vector<Eigen::MatrixXd> pperp_;
};

}  // namespace itc
