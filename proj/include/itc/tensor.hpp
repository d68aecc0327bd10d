#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace itc {

/// Error raised when an operation's contract is violated.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Dims = std::vector<std::size_t>;
using MultiIndex = std::vector<std::size_t>;

std::size_t product(const Dims& dims);

/// Row-major strides (last index fastest).
std::vector<std::size_t> row_major_strides(const Dims& dims);

std::size_t flatten(const Dims& dims, const MultiIndex& idx);
MultiIndex unflatten(const Dims& dims, std::size_t flat);

/// Order-k dense real tensor, k >= 2, stored row-major with the last index
/// fastest. Immutable once constructed.
class DenseTensor {
 public:
  DenseTensor(Dims dims, std::vector<double> values);

  static DenseTensor zeros(const Dims& dims);

  const Dims& dims() const { return dims_; }
  std::size_t order() const { return dims_.size(); }
  std::size_t size() const { return values_.size(); }
  std::size_t dim(std::size_t mode) const { return dims_.at(mode); }

  std::span<const double> values() const { return values_; }
  double flat(std::size_t i) const { return values_[i]; }
  double operator()(const MultiIndex& idx) const;

  double max_abs() const;
  bool is_zero() const;

 private:
  Dims dims_;
  std::vector<double> values_;
};

double inner(const DenseTensor& x, const DenseTensor& y);
double hs_norm(const DenseTensor& x);

DenseTensor operator+(const DenseTensor& x, const DenseTensor& y);
DenseTensor operator-(const DenseTensor& x, const DenseTensor& y);
DenseTensor operator*(double a, const DenseTensor& x);

/// x + a*y
DenseTensor axpy(const DenseTensor& x, double a, const DenseTensor& y);

void require_same_dims(const DenseTensor& x, const DenseTensor& y,
                       const char* what);

/// Signed rank-one tensor weight * u_1 (x) ... (x) u_k.
struct RankOneAtom {
  std::vector<Eigen::VectorXd> factors;
  double weight = 1.0;

  std::size_t order() const { return factors.size(); }
  /// true when every factor has l2 norm at most 1 + tol
  bool factors_in_unit_ball(double tol = 1e-12) const;
};

DenseTensor atom_to_tensor(const RankOneAtom& atom, const Dims& dims);

/// Mode-j unfolding: d_j x prod_{l != j} d_l; column (l, r) holds the mode-j
/// fiber with the leading modes at l and the trailing modes at r.
Eigen::MatrixXd unfold(const DenseTensor& x, std::size_t mode);
DenseTensor refold(const Eigen::MatrixXd& m, const Dims& dims, std::size_t mode);

/// Multiply mode j by matrix m (p x d_j); the result has d_j replaced by p.
DenseTensor mode_product(const DenseTensor& x, std::size_t mode,
                         const Eigen::MatrixXd& m);

/// Contract every mode except `keep` with the given vectors.
Eigen::VectorXd contract_all_but(const DenseTensor& x,
                                 std::span<const Eigen::VectorXd> factors,
                                 std::size_t keep);

/// Contract every mode except the pair (a, b), a < b, returning a d_a x d_b
/// matrix.
Eigen::MatrixXd contract_all_but_pair(const DenseTensor& x,
                                      std::span<const Eigen::VectorXd> factors,
                                      std::size_t a, std::size_t b);

/// <x, u_1 (x) ... (x) u_k>
double multilinear(const DenseTensor& x, std::span<const Eigen::VectorXd> factors);

// TNSR1 text format: order, dims, then row-major values.
void write_tnsr1(std::ostream& os, const DenseTensor& x);
DenseTensor read_tnsr1(std::istream& is);
DenseTensor load_tnsr1(const std::string& path);
void save_tnsr1(const std::string& path, const DenseTensor& x);

}  // namespace itc
