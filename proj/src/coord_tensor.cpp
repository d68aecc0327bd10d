#include "itc/coord_tensor.hpp"

namespace itc {

CoordTensor CoordTensor::from_dense(const DenseTensor& x, bool skip_zeros) {
  CoordTensor c;
  c.dims = x.dims();
  const std::size_t k = x.order();
  MultiIndex m(k, 0);
  auto v = x.values();
  for (std::size_t f = 0; f < v.size(); ++f) {
    if (!skip_zeros || v[f] != 0.0) {
      for (std::size_t j = 0; j < k; ++j) c.idx.push_back(static_cast<std::uint32_t>(m[j]));
      c.vals.push_back(v[f]);
    }
    for (std::size_t j = k; j-- > 0;) {
      if (++m[j] < c.dims[j]) break;
      m[j] = 0;
    }
  }
  return c;
}

Eigen::VectorXd CoordTensor::contract_all_but(std::span<const Eigen::VectorXd> factors,
                                              std::size_t keep) const {
  const std::size_t k = order();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims[keep]));
  const std::uint32_t* id = idx.data();
  for (std::size_t e = 0; e < vals.size(); ++e, id += k) {
    double w = vals[e];
    for (std::size_t j = 0; j < k; ++j) {
      if (j != keep) w *= factors[j](id[j]);
    }
    g(id[keep]) += w;
  }
  return g;
}

double CoordTensor::multilinear(std::span<const Eigen::VectorXd> factors) const {
  const std::size_t k = order();
  double s = 0.0;
  const std::uint32_t* id = idx.data();
  for (std::size_t e = 0; e < vals.size(); ++e, id += k) {
    double w = vals[e];
    for (std::size_t j = 0; j < k; ++j) w *= factors[j](id[j]);
    s += w;
  }
  return s;
}

Eigen::VectorXd CoordTensor::leading_mode_vector(std::size_t mode) const {
  const std::size_t k = order();
  const std::size_t d = dims[mode];
  std::size_t cols = 1;
  for (std::size_t j = 0; j < k; ++j) {
    if (j != mode) cols *= dims[j];
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                            static_cast<Eigen::Index>(cols));
  const std::uint32_t* id = idx.data();
  for (std::size_t e = 0; e < vals.size(); ++e, id += k) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != mode) c = c * dims[j] + id[j];
    }
    m(id[mode], static_cast<Eigen::Index>(c)) += vals[e];
  }
  const Eigen::MatrixXd gram = m * m.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  return es.eigenvectors().col(static_cast<Eigen::Index>(d) - 1);
}

DenseTensor CoordTensor::to_dense() const {
  std::vector<double> out(product(dims), 0.0);
  const std::size_t k = order();
  const std::uint32_t* id = idx.data();
  for (std::size_t e = 0; e < vals.size(); ++e, id += k) {
    std::size_t f = 0;
    for (std::size_t j = 0; j < k; ++j) f = f * dims[j] + id[j];
    out[f] += vals[e];
  }
  return DenseTensor(dims, std::move(out));
}

}  // namespace itc
