#include "itc/subspace.hpp"

#include <algorithm>
#include <cmath>

namespace itc {

SubspaceBasis mode_subspace(const DenseTensor& x, std::size_t mode,
                            double rank_tol) {
  if (mode >= x.order()) throw Error("mode out of range");
  if (!(rank_tol > 0.0)) throw Error("rank_tol must be positive");
  if (x.is_zero()) throw Error("mode_subspace: zero tensor has no defined rank");
  const Eigen::MatrixXd m = unfold(x, mode);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cut = rank_tol * s(0);
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > cut) ++r;
  SubspaceBasis b;
  b.mode = mode;
  const Eigen::Index d = m.rows();
  b.basis = svd.matrixU().leftCols(r);
  b.complement = svd.matrixU().rightCols(d - r);
  b.singular_values = s;
  return b;
}

SubspaceBasis basis_from_columns(std::size_t mode, const Eigen::MatrixXd& cols) {
  const Eigen::Index d = cols.rows();
  const Eigen::Index r = cols.cols();
  if (r < 1 || r > d) throw Error("basis_from_columns: bad column count");
  // Complete to a full orthonormal basis of R^d.
  Eigen::MatrixXd full(d, d);
  full.leftCols(r) = cols;
  full.rightCols(d - r).setIdentity();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(full);
  Eigen::MatrixXd q = qr.householderQ();
  SubspaceBasis b;
  b.mode = mode;
  b.basis = cols;
  Eigen::MatrixXd rest = q.rightCols(d - r);
  // Remove any residual component along cols, then reorthonormalize.
  rest -= cols * (cols.transpose() * rest);
  if (d - r > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(rest, Eigen::ComputeThinU);
    b.complement = svd.matrixU().leftCols(d - r);
  } else {
    b.complement = Eigen::MatrixXd(d, 0);
  }
  b.singular_values = Eigen::VectorXd::Ones(r);
  return b;
}

std::vector<std::size_t> tucker_ranks(const DenseTensor& x, double rank_tol) {
  std::vector<std::size_t> r(x.order());
  for (std::size_t j = 0; j < x.order(); ++j) r[j] = mode_subspace(x, j, rank_tol).rank();
  return r;
}

double coherence(const SubspaceBasis& b) {
  if (b.rank() < 1) throw Error("coherence: empty subspace");
  // ||P e_i||^2 equals the squared norm of row i of the basis.
  const double mx = b.basis.rowwise().squaredNorm().maxCoeff();
  return static_cast<double>(b.dim()) / static_cast<double>(b.rank()) * mx;
}

double mode_infty_bound(const SubspaceBasis& b) {
  if (b.rank() < 1) throw Error("mode_infty_bound: empty subspace");
  return std::sqrt(b.basis.rowwise().squaredNorm().maxCoeff());
}

ProjectorStack::ProjectorStack(const DenseTensor& reference, double rank_tol)
    : dims_(reference.dims()) {
  for (std::size_t j = 0; j < reference.order(); ++j) {
    bases_.push_back(mode_subspace(reference, j, rank_tol));
  }
  for (const auto& b : bases_) {
    p_.push_back(b.projector());
    pperp_.push_back(Eigen::MatrixXd::Identity(b.dim(), b.dim()) - p_.back());
  }
}

ProjectorStack::ProjectorStack(std::vector<SubspaceBasis> bases)
    : bases_(std::move(bases)) {
  if (bases_.size() < 2) throw Error("ProjectorStack needs at least two modes");
  for (const auto& b : bases_) {
    dims_.push_back(b.dim());
    p_.push_back(b.projector());
    pperp_.push_back(Eigen::MatrixXd::Identity(b.dim(), b.dim()) - p_.back());
  }
}

std::vector<std::size_t> ProjectorStack::ranks() const {
  std::vector<std::size_t> r;
  for (const auto& b : bases_) r.push_back(b.rank());
  return r;
}

DenseTensor ProjectorStack::apply_chain(
    const DenseTensor& w, const std::vector<const Eigen::MatrixXd*>& ops) const {
  DenseTensor out = w;
  for (std::size_t j = 0; j < ops.size(); ++j) {
    if (ops[j] != nullptr) out = mode_product(out, j, *ops[j]);
  }
  return out;
}

DenseTensor ProjectorStack::project(const DenseTensor& w,
                                    const Projection& which) const {
  if (w.dims() != dims_) throw Error("project_tangent: shape mismatch");
  const std::size_t k = order();
  std::vector<const Eigen::MatrixXd*> ops(k);
  switch (which.kind) {
    case Projection::Kind::Q0: {
      for (std::size_t j = 0; j < k; ++j) ops[j] = &p_[j];
      return apply_chain(w, ops);
    }
    case Projection::Kind::Q: {
      for (std::size_t j = 0; j < k; ++j) ops[j] = &p_[j];
      const DenseTensor core = apply_chain(w, ops);
      std::vector<double> acc(core.values().begin(), core.values().end());
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) ops[j] = (j == i) ? &pperp_[j] : &p_[j];
        const DenseTensor term = apply_chain(w, ops);
        auto tv = term.values();
        for (std::size_t f = 0; f < acc.size(); ++f) acc[f] += tv[f];
      }
      return DenseTensor(dims_, std::move(acc));
    }
    case Projection::Kind::Qperp: {
      return w - project(w, Projection::q());
    }
    case Projection::Kind::QperpPair: {
      if (!(which.j1 < which.j2 && which.j2 < k)) {
        throw Error("project_tangent: bad pair");
      }
      for (std::size_t j = 0; j < k; ++j) {
        if (j == which.j1 || j == which.j2) ops[j] = &pperp_[j];
        else if (j < which.j2) ops[j] = &p_[j];
        else ops[j] = nullptr;
      }
      return apply_chain(w, ops);
    }
  }
  throw Error("project_tangent: unknown projection");
}

std::size_t ProjectorStack::tangent_dimension() const {
  const std::size_t k = order();
  std::size_t core = 1;
  for (const auto& b : bases_) core *= b.rank();
  std::size_t total = core;
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t t = bases_[j].dim() - bases_[j].rank();
    for (std::size_t l = 0; l < k; ++l) {
      if (l != j) t *= bases_[l].rank();
    }
    total += t;
  }
  return total;
}

Eigen::MatrixXd ProjectorStack::tangent_basis() const {
  const std::size_t k = order();
  const std::size_t n = product(dims_);
  Eigen::MatrixXd out(n, tangent_dimension());
  Eigen::Index col = 0;
  // perp_mode == k means all modes use the subspace basis.
  for (std::size_t perp_mode = 0; perp_mode <= k; ++perp_mode) {
    std::vector<const Eigen::MatrixXd*> mats(k);
    Dims counts(k);
    bool empty = false;
    for (std::size_t j = 0; j < k; ++j) {
      mats[j] = (j == perp_mode) ? &bases_[j].complement : &bases_[j].basis;
      counts[j] = static_cast<std::size_t>(mats[j]->cols());
      if (counts[j] == 0) empty = true;
    }
    if (empty) continue;
    const std::size_t combos = product(counts);
    for (std::size_t c = 0; c < combos; ++c) {
      const MultiIndex pick = unflatten(counts, c);
      RankOneAtom a;
      for (std::size_t j = 0; j < k; ++j) a.factors.push_back(mats[j]->col(pick[j]));
      const DenseTensor t = atom_to_tensor(a, dims_);
      out.col(col++) = Eigen::Map<const Eigen::VectorXd>(t.values().data(), n);
    }
  }
  return out;
}

double ProjectorStack::tangent_leverage(const MultiIndex& omega) const {
  const std::size_t k = order();
  std::vector<double> p(k);
  for (std::size_t j = 0; j < k; ++j) p[j] = p_[j](omega[j], omega[j]);
  double all = 1.0;
  for (double v : p) all *= v;
  double total = all;
  for (std::size_t j = 0; j < k; ++j) {
    double t = 1.0 - p[j];
    for (std::size_t l = 0; l < k; ++l) {
      if (l != j) t *= p[l];
    }
    total += t;
  }
  return total;
}

}  // namespace itc
