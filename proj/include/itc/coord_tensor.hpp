#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "itc/tensor.hpp"

namespace itc {

/// Coordinate-list view of a tensor: entry e sits at multi-index
/// idx[e*k .. e*k+k). Used for Omega-supported tensors and as the common
/// input of the contraction kernels.
struct CoordTensor {
  Dims dims;
  std::vector<std::uint32_t> idx;
  std::vector<double> vals;

  std::size_t order() const { return dims.size(); }
  std::size_t nnz() const { return vals.size(); }

  static CoordTensor from_dense(const DenseTensor& x, bool skip_zeros = true);

  Eigen::VectorXd contract_all_but(std::span<const Eigen::VectorXd> factors,
                                   std::size_t keep) const;
  double multilinear(std::span<const Eigen::VectorXd> factors) const;

  /// Leading left singular vector of the mode-j unfolding.
  Eigen::VectorXd leading_mode_vector(std::size_t mode) const;

  DenseTensor to_dense() const;
};

}  // namespace itc
