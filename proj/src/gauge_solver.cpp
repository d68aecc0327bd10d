#include "itc/gauge_solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "itc/rng.hpp"

namespace itc {

namespace {

// Euclidean projection onto {||x||_1 <= r}.
Eigen::VectorXd project_l1(const Eigen::VectorXd& v, double r) {
  if (v.lpNorm<1>() <= r) return v;
  std::vector<double> a(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) a[static_cast<std::size_t>(i)] = std::abs(v(i));
  std::sort(a.begin(), a.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cum += a[i];
    const double t = (cum - r) / static_cast<double>(i + 1);
    if (a[i] - t > 0.0) theta = t;
  }
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double m = std::max(std::abs(v(i)) - theta, 0.0);
    out(i) = v(i) >= 0 ? m : -m;
  }
  return out;
}

// argmin sum_i h_i u_i^2 - 2 g_i u_i over {||u||_2 <= 1, |u_i| <= box}.
Eigen::VectorXd solve_separable(const Eigen::VectorXd& h, const Eigen::VectorXd& g,
                                double box, const Eigen::VectorXd& old) {
  auto at = [&](double nu) {
    Eigen::VectorXd u(h.size());
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      const double den = h(i) + nu;
      const double raw = den > 0.0 ? g(i) / den : old(i);
      u(i) = std::clamp(raw, -box, box);
    }
    return u;
  };
  Eigen::VectorXd u = at(0.0);
  if (u.squaredNorm() <= 1.0) return u;
  double lo = 0.0;
  double hi = std::max(1e-300, h.maxCoeff());
  while (at(hi).squaredNorm() > 1.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (at(mid).squaredNorm() > 1.0) lo = mid;
    else hi = mid;
  }
  u = at(hi);
  const double n = u.norm();
  if (n > 1.0) u /= n;
  return u;
}

// Moves lam along kernel directions of [A; sign(lam)^T] until coordinates
// hit zero. A lam and ||lam||_1 are unchanged, and at most rows + 1 entries
// stay nonzero.
void reduce_support(const Eigen::MatrixXd& a, Eigen::VectorXd& lam) {
  const Eigen::Index p = lam.size();
  if (p <= a.rows() + 1) return;
  Eigen::MatrixXd bm(a.rows() + 1, p);
  bm.topRows(a.rows()) = a;
  for (Eigen::Index i = 0; i < p; ++i) bm(a.rows(), i) = lam(i) >= 0.0 ? 1.0 : -1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(bm);
  if (lu.dimensionOfKernel() == 0) return;
  Eigen::MatrixXd ker = lu.kernel();
  for (Eigen::Index q = 0; q < ker.cols(); ++q) {
    const Eigen::VectorXd v = ker.col(q);
    Eigen::Index drop = -1;
    double best = std::numeric_limits<double>::infinity();
    const double vmax = v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < p; ++i) {
      if (lam(i) == 0.0 || std::abs(v(i)) <= 1e-12 * vmax) continue;
      const double t = -lam(i) / v(i);
      if (std::abs(t) < std::abs(best)) {
        best = t;
        drop = i;
      }
    }
    if (drop < 0) continue;
    lam += best * v;
    lam(drop) = 0.0;
    for (Eigen::Index r = q + 1; r < ker.cols(); ++r) {
      ker.col(r) -= (ker(drop, r) / v(drop)) * v;
      ker(drop, r) = 0.0;
    }
  }
}

bool is_free(const GaugeAtom& a, std::size_t j) { return j == a.a || j == a.b; }

}  // namespace

GaugeSolver::GaugeSolver(Dims dims, std::vector<std::uint32_t> idx, Eigen::VectorXd b,
                         IncoherenceParams p, GaugeSolverConfig cfg)
    : dims_(std::move(dims)),
      idx_(std::move(idx)),
      b_(std::move(b)),
      p_(std::move(p)),
      cfg_(cfg) {
  if (idx_.size() != static_cast<std::size_t>(b_.size()) * dims_.size()) {
    throw Error("GaugeSolver: index/value length mismatch");
  }
  if (p_.order() != dims_.size()) throw Error("GaugeSolver: delta has wrong order");
}

Eigen::VectorXd GaugeSolver::evaluate(const GaugeAtom& atom) const {
  const std::size_t k = dims_.size();
  Eigen::VectorXd out(b_.size());
  const std::uint32_t* id = idx_.data();
  for (Eigen::Index e = 0; e < b_.size(); ++e, id += k) {
    double w = 1.0;
    for (std::size_t j = 0; j < k; ++j) w *= atom.factors[j](id[j]);
    out(e) = w;
  }
  return out;
}

void GaugeSolver::refit(const Eigen::MatrixXd& a, double tau, Eigen::VectorXd& lam) const {
  const Eigen::Index p = a.cols();
  if (p == 0) return;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  const Eigen::VectorXd ls = cod.solve(b_);
  if (ls.lpNorm<1>() <= tau) {
    lam = ls;
    return;
  }
  const Eigen::MatrixXd m = a.transpose() * a;
  const Eigen::VectorXd c = a.transpose() * b_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const double lip = es.eigenvalues().maxCoeff();
  if (!(lip > 0.0)) {
    lam.setZero(p);
    return;
  }
  auto objective = [&](const Eigen::VectorXd& v) { return 0.5 * v.dot(m * v) - c.dot(v); };

  // Exact minimizer on the support and sign pattern of x, if it satisfies
  // the optimality conditions of the full problem.
  auto polish = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
    std::vector<Eigen::Index> sup;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (x(i) != 0.0) sup.push_back(i);
    }
    // more atoms than observations leaves M_SS singular
    if (sup.empty() || static_cast<Eigen::Index>(sup.size()) > a.rows()) return false;
    const auto ns = static_cast<Eigen::Index>(sup.size());
    Eigen::MatrixXd ms(ns, ns);
    Eigen::VectorXd cs(ns), s(ns);
    for (Eigen::Index i = 0; i < ns; ++i) {
      const Eigen::Index si = sup[static_cast<std::size_t>(i)];
      s(i) = x(si) > 0 ? 1.0 : -1.0;
      cs(i) = c(si);
      for (Eigen::Index j = 0; j < ns; ++j) ms(i, j) = m(si, sup[static_cast<std::size_t>(j)]);
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(ms);
    if (ldlt.info() != Eigen::Success) return false;
    const Eigen::VectorXd ls_s = ldlt.solve(cs);
    const Eigen::VectorXd v = ldlt.solve(s);
    const double sv = s.dot(v);
    if (!(sv > 0.0)) return false;
    const double theta = (s.dot(ls_s) - tau) / sv;
    if (theta < 0.0) return false;
    const Eigen::VectorXd cand = ls_s - theta * v;
    for (Eigen::Index i = 0; i < ns; ++i) {
      if (!(cand(i) * s(i) > 0.0)) return false;
    }
    Eigen::VectorXd full = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < ns; ++i) full(sup[static_cast<std::size_t>(i)]) = cand(i);
    const Eigen::VectorXd corr = c - m * full;
    if (corr.cwiseAbs().maxCoeff() > theta * (1.0 + 1e-9) + 1e-13 * c.cwiseAbs().maxCoeff()) {
      return false;
    }
    if (objective(full) > objective(x) + 1e-13 * std::abs(objective(x))) return false;
    out = std::move(full);
    return true;
  };

  Eigen::VectorXd x = project_l1(lam.size() == p ? lam : Eigen::VectorXd::Zero(p), tau);
  Eigen::VectorXd y = x;
  double t = 1.0;
  // polish only once the support has stopped moving between checks
  std::vector<bool> last_sup;
  auto support = [&](const Eigen::VectorXd& v) {
    std::vector<bool> out(static_cast<std::size_t>(p));
    for (Eigen::Index i = 0; i < p; ++i) out[static_cast<std::size_t>(i)] = v(i) != 0.0;
    return out;
  };
  for (int it = 1; it <= 2000; ++it) {
    const Eigen::VectorXd xn = project_l1(y - (m * y - c) / lip, tau);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = xn + ((t - 1.0) / tn) * (xn - x);
    const double diff = (xn - x).norm();
    x = xn;
    t = tn;
    const bool done = diff <= 1e-15 * std::max(1.0, x.norm());
    if (it % 25 == 0 || done) {
      std::vector<bool> sup = support(x);
      Eigen::VectorXd exact;
      if ((done || sup == last_sup) && polish(x, exact)) {
        lam = std::move(exact);
        return;
      }
      last_sup = std::move(sup);
      if (done) break;
    }
  }
  lam = x;
}

void GaugeSolver::refine(std::vector<GaugeAtom>& atoms, Eigen::VectorXd& resid) const {
  const std::size_t k = dims_.size();
  const Eigen::Index n = b_.size();
  for (auto& at : atoms) {
    if (at.weight == 0.0) continue;
    const Eigen::VectorXd ra = resid - at.weight * evaluate(at);
    for (std::size_t j = 0; j < k; ++j) {
      Eigen::VectorXd h = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims_[j]));
      Eigen::VectorXd g = Eigen::VectorXd::Zero(h.size());
      const std::uint32_t* id = idx_.data();
      for (Eigen::Index e = 0; e < n; ++e, id += k) {
        double c = at.weight;
        for (std::size_t l = 0; l < k; ++l) {
          if (l != j) c *= at.factors[l](id[l]);
        }
        h(id[j]) += c * c;
        g(id[j]) -= c * ra(e);
      }
      const double box = is_free(at, j) ? 1.0 : p_[j];
      at.factors[j] = solve_separable(h, g, box, at.factors[j]);
    }
    resid = ra + at.weight * evaluate(at);
  }
  // Push each factor to the boundary of its constraint set and fold the
  // scale into the weight; the represented tensor is unchanged.
  for (auto& at : atoms) {
    for (std::size_t j = 0; j < k; ++j) {
      const double n2 = at.factors[j].norm();
      if (n2 == 0.0) {
        at.weight = 0.0;
        break;
      }
      double s = 1.0 / n2;
      if (!is_free(at, j)) s = std::min(s, p_[j] / at.factors[j].cwiseAbs().maxCoeff());
      at.factors[j] *= s;
      at.weight /= s;
    }
  }
}

GaugeFixedResult GaugeSolver::solve_fixed(double tau, std::vector<GaugeAtom> warm,
                                          double gap_abs, double gap_rel) const {
  GaugeFixedResult out;
  std::vector<GaugeAtom> atoms;
  for (auto& w : warm) {
    if (w.weight != 0.0) atoms.push_back(std::move(w));
  }
  double g0 = 0.0;
  for (const auto& a : atoms) g0 += std::abs(a.weight);
  if (g0 > tau && g0 > 0.0) {
    for (auto& a : atoms) a.weight *= tau / g0;
  }

  Eigen::MatrixXd amat;
  auto rebuild = [&]() {
    amat.resize(b_.size(), static_cast<Eigen::Index>(atoms.size()));
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      amat.col(static_cast<Eigen::Index>(i)) = evaluate(atoms[i]);
    }
  };
  auto do_refit = [&]() {
    Eigen::VectorXd lam(static_cast<Eigen::Index>(atoms.size()));
    for (std::size_t i = 0; i < atoms.size(); ++i) lam(static_cast<Eigen::Index>(i)) = atoms[i].weight;
    refit(amat, tau, lam);
    for (std::size_t i = 0; i < atoms.size(); ++i) atoms[i].weight = lam(static_cast<Eigen::Index>(i));
  };
  auto prune = [&]() {
    if (atoms.size() > static_cast<std::size_t>(b_.size()) + 1) {
      Eigen::VectorXd lam(static_cast<Eigen::Index>(atoms.size()));
      for (std::size_t i = 0; i < atoms.size(); ++i) lam(static_cast<Eigen::Index>(i)) = atoms[i].weight;
      reduce_support(amat, lam);
      for (std::size_t i = 0; i < atoms.size(); ++i) atoms[i].weight = lam(static_cast<Eigen::Index>(i));
    }
    double g = 0.0;
    for (const auto& a : atoms) g += std::abs(a.weight);
    std::vector<GaugeAtom> kept;
    for (auto& a : atoms) {
      if (std::abs(a.weight) > 1e-15 * g) kept.push_back(std::move(a));
    }
    atoms = std::move(kept);
    rebuild();
  };
  auto fitted = [&]() {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(b_.size());
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      f += atoms[i].weight * amat.col(static_cast<Eigen::Index>(i));
    }
    return f;
  };

  rebuild();
  if (!atoms.empty()) {
    do_refit();
    prune();
  }

  double f_prev = std::numeric_limits<double>::infinity();
  int stall = 0;
  double gap = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < cfg_.max_iters; ++it) {
    const Eigen::VectorXd x = fitted();
    const Eigen::VectorXd r = x - b_;
    const double res = r.norm();
    const double f = 0.5 * res * res;
    if (res <= cfg_.feas_abs) {
      out.feasible = true;
      break;
    }
    if (f_prev - f <= 1e-9 * f_prev) {
      if (++stall >= 5) break;
    } else {
      stall = 0;
    }
    f_prev = std::min(f_prev, f);

    CoordTensor neg{dims_, idx_, std::vector<double>(b_.size())};
    for (Eigen::Index e = 0; e < r.size(); ++e) neg.vals[static_cast<std::size_t>(e)] = -r(e);
    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
      return std::abs(atoms[i].weight) > std::abs(atoms[j].weight);
    });
    std::vector<SpectralStart> starts;
    for (std::size_t i = 0; i < std::min<std::size_t>(4, order.size()); ++i) {
      starts.push_back({atoms[order[i]].factors});
    }
    SpectralConfig lc = cfg_.lmo;
    lc.seed = derive_seed(cfg_.lmo.seed, static_cast<std::uint64_t>(it),
                          std::bit_cast<std::uint64_t>(tau));
    const SpectralResult s = incoherent_spectral_lb(neg, p_, lc, starts);
    gap = r.dot(x) + tau * s.value;
    out.gap = gap;
    out.dual_norm = s.value;
    if (gap <= gap_abs || gap <= gap_rel * f) break;
    // f - gap lower-bounds the optimum when the oracle is exact; require the
    // bound to exceed twice the feasibility radius before trusting it.
    if (f - gap > 2.0 * cfg_.feas_abs * cfg_.feas_abs) {
      out.certified_infeasible = true;
      break;
    }
    if (atoms.size() >= cfg_.max_atoms) {
      out.hit_atom_cap = true;
      break;
    }
    GaugeAtom na;
    na.factors = s.atom.factors;
    na.a = s.pair.first;
    na.b = s.pair.second;
    na.weight = 0.0;
    atoms.push_back(std::move(na));
    rebuild();
    do_refit();
    for (int sw = 0; sw < cfg_.refine_sweeps; ++sw) {
      Eigen::VectorXd resid = fitted() - b_;
      refine(atoms, resid);
      rebuild();
      do_refit();
    }
    prune();
  }
  out.iterations = it;
  out.fitted = fitted();
  out.residual = (out.fitted - b_).norm();
  out.feasible = out.residual <= cfg_.feas_abs;
  for (const auto& a : atoms) out.gauge += std::abs(a.weight);
  out.atoms = std::move(atoms);
  return out;
}

GaugeContinuation GaugeSolver::minimize_gauge() const {
  GaugeContinuation cont;
  const double bn = b_.norm();
  if (bn == 0.0) {
    cont.converged = true;
    cont.best.feasible = true;
    cont.best.fitted = Eigen::VectorXd::Zero(b_.size());
    cont.closest = cont.best;
    return cont;
  }
  auto track = [&](const GaugeFixedResult& r) {
    ++cont.solves;
    if (cont.solves == 1 || r.residual < cont.closest.residual) cont.closest = r;
  };
  // phi(tau) = min residual is convex and decreasing with slope
  // -dual_norm / residual. Newton steps aim at half the tolerance, so they
  // land just inside the feasible side; bisection keeps them bracketed.
  const double target = 0.5 * cfg_.feas_abs;
  double tau = bn;
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  bool have = false;
  bool have_inf = false;
  double inf_res = 0.0;
  double inf_dual = 0.0;
  int bracket_steps = 0;
  std::vector<GaugeAtom> warm;
  for (int step = 0; step < 64 + cfg_.bisection_steps; ++step) {
    GaugeFixedResult r = solve_fixed(tau, warm, cfg_.gap_abs, cfg_.continuation_gap_rel);
    track(r);
    warm = r.atoms;
    if (r.feasible) {
      hi = std::min(tau, r.gauge);
      cont.best = std::move(r);
      have = true;
    } else {
      if (tau > lo) {
        lo = tau;
        have_inf = true;
        inf_res = r.residual;
        inf_dual = r.dual_norm;
      }
      if (r.hit_atom_cap && !have) break;
    }
    if (have) {
      if (++bracket_steps > cfg_.bisection_steps) break;
      if (hi - lo <= cfg_.bisection_rel_width * hi) break;
    }
    double next = have ? 0.5 * (lo + hi) : 2.0 * tau;
    if (have_inf && inf_dual > 0.0) {
      const double newton =
          (lo + (inf_res - target) * inf_res / inf_dual) * (1.0 + cfg_.newton_overshoot);
      if (newton > lo && (!have || newton < hi)) next = newton;
    }
    tau = next;
  }
  cont.tau_infeasible = lo;
  cont.converged = have;
  if (!have) cont.best = cont.closest;
  return cont;
}

DenseTensor assemble(const std::vector<GaugeAtom>& atoms, const Dims& dims) {
  std::vector<double> acc(product(dims), 0.0);
  for (const auto& a : atoms) {
    const DenseTensor t = atom_to_tensor(to_rank_one(a), dims);
    auto v = t.values();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
  }
  return DenseTensor(dims, std::move(acc));
}

RankOneAtom to_rank_one(const GaugeAtom& a) {
  RankOneAtom r;
  r.factors = a.factors;
  r.weight = a.weight;
  return r;
}

}  // namespace itc
