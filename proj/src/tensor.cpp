#include "itc/tensor.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace itc {

namespace {

// View of a row-major tensor around one mode as (left, mid, right).
struct ModeSplit {
  std::size_t left = 1;
  std::size_t mid = 1;
  std::size_t right = 1;
};

ModeSplit split_at(const Dims& dims, std::size_t mode) {
  ModeSplit s;
  for (std::size_t j = 0; j < dims.size(); ++j) {
    if (j < mode) s.left *= dims[j];
    else if (j == mode) s.mid = dims[j];
    else s.right *= dims[j];
  }
  return s;
}

void check_mode(const Dims& dims, std::size_t mode) {
  if (mode >= dims.size()) {
    throw Error("mode " + std::to_string(mode) + " out of range for order " +
                std::to_string(dims.size()));
  }
}

void check_factors(const Dims& dims, std::span<const Eigen::VectorXd> factors) {
  if (factors.size() != dims.size()) throw Error("factor count mismatch");
  for (std::size_t j = 0; j < dims.size(); ++j) {
    if (static_cast<std::size_t>(factors[j].size()) != dims[j]) {
      throw Error("factor " + std::to_string(j) + " dimension mismatch");
    }
  }
}

}  // namespace

std::size_t product(const Dims& dims) {
  std::size_t p = 1;
  for (auto d : dims) p *= d;
  return p;
}

std::vector<std::size_t> row_major_strides(const Dims& dims) {
  std::vector<std::size_t> s(dims.size(), 1);
  for (std::size_t j = dims.size(); j-- > 1;) s[j - 1] = s[j] * dims[j];
  return s;
}

std::size_t flatten(const Dims& dims, const MultiIndex& idx) {
  if (idx.size() != dims.size()) throw Error("multi-index order mismatch");
  std::size_t f = 0;
  for (std::size_t j = 0; j < dims.size(); ++j) {
    if (idx[j] >= dims[j]) throw Error("multi-index out of range");
    f = f * dims[j] + idx[j];
  }
  return f;
}

MultiIndex unflatten(const Dims& dims, std::size_t flat) {
  MultiIndex idx(dims.size());
  for (std::size_t j = dims.size(); j-- > 0;) {
    idx[j] = flat % dims[j];
    flat /= dims[j];
  }
  return idx;
}

DenseTensor::DenseTensor(Dims dims, std::vector<double> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
  if (dims_.empty()) throw Error("empty dims");
  if (dims_.size() < 2) throw Error("tensor order must be at least 2");
  for (auto d : dims_) {
    if (d == 0) throw Error("every dimension must be positive");
  }
  if (values_.size() != product(dims_)) throw Error("length mismatch");
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error("non-finite value");
  }
}

DenseTensor DenseTensor::zeros(const Dims& dims) {
  return DenseTensor(dims, std::vector<double>(product(dims), 0.0));
}

double DenseTensor::operator()(const MultiIndex& idx) const {
  return values_[flatten(dims_, idx)];
}

double DenseTensor::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool DenseTensor::is_zero() const {
  for (double v : values_) {
    if (v != 0.0) return false;
  }
  return true;
}

void require_same_dims(const DenseTensor& x, const DenseTensor& y,
                       const char* what) {
  if (x.dims() != y.dims()) throw Error(std::string("shape mismatch in ") + what);
}

double inner(const DenseTensor& x, const DenseTensor& y) {
  require_same_dims(x, y, "inner");
  double s = 0.0;
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i] * yv[i];
  return s;
}

double hs_norm(const DenseTensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v * v;
  return std::sqrt(s);
}

DenseTensor axpy(const DenseTensor& x, double a, const DenseTensor& y) {
  require_same_dims(x, y, "axpy");
  std::vector<double> out(x.values().begin(), x.values().end());
  auto yv = y.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * yv[i];
  return DenseTensor(x.dims(), std::move(out));
}

DenseTensor operator+(const DenseTensor& x, const DenseTensor& y) {
  return axpy(x, 1.0, y);
}

DenseTensor operator-(const DenseTensor& x, const DenseTensor& y) {
  return axpy(x, -1.0, y);
}

DenseTensor operator*(double a, const DenseTensor& x) {
  std::vector<double> out(x.values().begin(), x.values().end());
  for (double& v : out) v *= a;
  return DenseTensor(x.dims(), std::move(out));
}

bool RankOneAtom::factors_in_unit_ball(double tol) const {
  for (const auto& f : factors) {
    if (f.norm() > 1.0 + tol) return false;
  }
  return true;
}

DenseTensor atom_to_tensor(const RankOneAtom& atom, const Dims& dims) {
  check_factors(dims, atom.factors);
  const std::size_t n = product(dims);
  const std::size_t k = dims.size();
  std::vector<double> out(n);
  MultiIndex idx(k, 0);
  for (std::size_t f = 0; f < n; ++f) {
    double v = atom.weight;
    for (std::size_t j = 0; j < k; ++j) v *= atom.factors[j](idx[j]);
    out[f] = v;
    for (std::size_t j = k; j-- > 0;) {
      if (++idx[j] < dims[j]) break;
      idx[j] = 0;
    }
  }
  return DenseTensor(dims, std::move(out));
}

Eigen::MatrixXd unfold(const DenseTensor& x, std::size_t mode) {
  check_mode(x.dims(), mode);
  const auto s = split_at(x.dims(), mode);
  Eigen::MatrixXd m(s.mid, s.left * s.right);
  auto v = x.values();
  for (std::size_t l = 0; l < s.left; ++l) {
    for (std::size_t a = 0; a < s.mid; ++a) {
      const std::size_t base = (l * s.mid + a) * s.right;
      for (std::size_t r = 0; r < s.right; ++r) m(a, l * s.right + r) = v[base + r];
    }
  }
  return m;
}

DenseTensor refold(const Eigen::MatrixXd& m, const Dims& dims, std::size_t mode) {
  check_mode(dims, mode);
  const auto s = split_at(dims, mode);
  if (static_cast<std::size_t>(m.rows()) != s.mid ||
      static_cast<std::size_t>(m.cols()) != s.left * s.right) {
    throw Error("refold: matrix shape does not match dims");
  }
  std::vector<double> out(product(dims));
  for (std::size_t l = 0; l < s.left; ++l) {
    for (std::size_t a = 0; a < s.mid; ++a) {
      const std::size_t base = (l * s.mid + a) * s.right;
      for (std::size_t r = 0; r < s.right; ++r) out[base + r] = m(a, l * s.right + r);
    }
  }
  return DenseTensor(dims, std::move(out));
}

DenseTensor mode_product(const DenseTensor& x, std::size_t mode,
                         const Eigen::MatrixXd& m) {
  check_mode(x.dims(), mode);
  const auto s = split_at(x.dims(), mode);
  if (static_cast<std::size_t>(m.cols()) != s.mid) {
    throw Error("mode_product: matrix columns do not match mode dimension");
  }
  const std::size_t p = static_cast<std::size_t>(m.rows());
  Dims out_dims = x.dims();
  out_dims[mode] = p;
  std::vector<double> out(s.left * p * s.right, 0.0);
  auto v = x.values();
  for (std::size_t l = 0; l < s.left; ++l) {
    for (std::size_t a = 0; a < s.mid; ++a) {
      const double* src = v.data() + (l * s.mid + a) * s.right;
      for (std::size_t b = 0; b < p; ++b) {
        const double c = m(b, a);
        if (c == 0.0) continue;
        double* dst = out.data() + (l * p + b) * s.right;
        for (std::size_t r = 0; r < s.right; ++r) dst[r] += c * src[r];
      }
    }
  }
  return DenseTensor(std::move(out_dims), std::move(out));
}

Eigen::VectorXd contract_all_but(const DenseTensor& x,
                                 std::span<const Eigen::VectorXd> factors,
                                 std::size_t keep) {
  check_factors(x.dims(), factors);
  check_mode(x.dims(), keep);
  const auto& dims = x.dims();
  const std::size_t k = dims.size();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dims[keep]);
  MultiIndex idx(k, 0);
  auto v = x.values();
  for (std::size_t f = 0; f < v.size(); ++f) {
    double w = v[f];
    for (std::size_t j = 0; j < k && w != 0.0; ++j) {
      if (j != keep) w *= factors[j](idx[j]);
    }
    g(idx[keep]) += w;
    for (std::size_t j = k; j-- > 0;) {
      if (++idx[j] < dims[j]) break;
      idx[j] = 0;
    }
  }
  return g;
}

Eigen::MatrixXd contract_all_but_pair(const DenseTensor& x,
                                      std::span<const Eigen::VectorXd> factors,
                                      std::size_t a, std::size_t b) {
  check_factors(x.dims(), factors);
  check_mode(x.dims(), a);
  check_mode(x.dims(), b);
  if (a >= b) throw Error("contract_all_but_pair requires a < b");
  const auto& dims = x.dims();
  const std::size_t k = dims.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dims[a], dims[b]);
  MultiIndex idx(k, 0);
  auto v = x.values();
  for (std::size_t f = 0; f < v.size(); ++f) {
    double w = v[f];
    for (std::size_t j = 0; j < k && w != 0.0; ++j) {
      if (j != a && j != b) w *= factors[j](idx[j]);
    }
    m(idx[a], idx[b]) += w;
    for (std::size_t j = k; j-- > 0;) {
      if (++idx[j] < dims[j]) break;
      idx[j] = 0;
    }
  }
  return m;
}

double multilinear(const DenseTensor& x, std::span<const Eigen::VectorXd> factors) {
  const Eigen::VectorXd g = contract_all_but(x, factors, 0);
  return g.dot(factors[0]);
}

void write_tnsr1(std::ostream& os, const DenseTensor& x) {
  os << x.order() << '\n';
  for (std::size_t j = 0; j < x.order(); ++j) {
    os << (j ? " " : "") << x.dim(j);
  }
  os << '\n';
  os << std::setprecision(17);
  const auto v = x.values();
  const std::size_t row = x.dims().back();
  for (std::size_t i = 0; i < v.size(); ++i) {
    os << v[i] << ((i + 1) % row == 0 ? '\n' : ' ');
  }
}

DenseTensor read_tnsr1(std::istream& is) {
  std::size_t k = 0;
  if (!(is >> k) || k < 2) throw Error("TNSR1: bad order");
  Dims dims(k);
  for (auto& d : dims) {
    if (!(is >> d)) throw Error("TNSR1: bad dims");
  }
  std::vector<double> values;
  values.reserve(product(dims));
  std::string tok;
  while (is >> tok) {
    std::istringstream ts(tok);
    double v;
    if (!(ts >> v)) throw Error("TNSR1: bad value '" + tok + "'");
    values.push_back(v);
  }
  return DenseTensor(std::move(dims), std::move(values));
}

DenseTensor load_tnsr1(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_tnsr1(in);
}

void save_tnsr1(const std::string& path, const DenseTensor& x) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_tnsr1(out, x);
}

}  // namespace itc
