#include <cmath>
#include <string>

#include "json.hpp"

#include "itc/gauge_solver.hpp"
#include "itc/norms.hpp"
#include "itc/subspace.hpp"

namespace itc {

namespace {

GaugeSolver full_solver(const DenseTensor& x, const IncoherenceParams& p,
                        const NuclearConfig& cfg) {
  CoordTensor c = CoordTensor::from_dense(x, false);
  Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(c.vals.data(),
                                                        static_cast<Eigen::Index>(c.nnz()));
  const double bn = b.norm();
  GaugeSolverConfig g;
  g.feas_abs = cfg.feas_tol * bn;
  g.gap_abs = cfg.gap_tol * bn * bn;
  g.max_atoms = cfg.max_atoms;
  g.max_iters = cfg.max_fw_iters;
  g.refine_sweeps = cfg.refine_sweeps;
  g.bisection_steps = cfg.bisection_steps;
  g.bisection_rel_width = cfg.bisection_rel_width;
  g.lmo = cfg.lmo;
  return GaugeSolver(x.dims(), std::move(c.idx), std::move(b), p, g);
}

NuclearResult to_result(const GaugeContinuation& c) {
  NuclearResult r;
  r.value = c.best.gauge;
  for (const auto& a : c.best.atoms) {
    r.atoms.push_back(to_rank_one(a));
    r.pairs.emplace_back(a.a, a.b);
  }
  r.residual_hs = c.best.residual;
  r.gap = c.best.gap;
  r.status = c.converged ? SolveStatus::converged : SolveStatus::not_converged;
  r.tau_infeasible = c.tau_infeasible;
  return r;
}

}  // namespace

NuclearResult incoherent_nuclear_ub(const DenseTensor& x, const IncoherenceParams& p,
                                    const NuclearConfig& cfg) {
  if (p.dims() != x.dims()) throw Error("incoherence parameters do not match tensor shape");
  if (x.is_zero()) return NuclearResult{};
  const GaugeSolver solver = full_solver(x, p, cfg);
  return to_result(solver.minimize_gauge());
}

DualAtomResult dual_atom(const DenseTensor& x, const IncoherenceParams& p,
                         const DualAtomConfig& cfg) {
  if (p.dims() != x.dims()) throw Error("incoherence parameters do not match tensor shape");
  if (x.is_zero()) throw Error("dual_atom: zero tensor");
  const ProjectorStack stack(x);
  for (std::size_t j = 0; j < x.order(); ++j) {
    const double need = mode_infty_bound(stack.basis(j));
    if (p[j] < need * (1.0 - cfg.hypothesis_tol)) {
      throw Error("dual_atom: hypothesis violated on mode " + std::to_string(j) + " (delta " +
                  std::to_string(p[j]) + " < required " + std::to_string(need) + ")");
    }
  }
  const GaugeSolver solver = full_solver(x, p, cfg.nuclear);
  const GaugeContinuation cont = solver.minimize_gauge();
  DualAtomResult out{DenseTensor::zeros(x.dims()), 0.0, cont.best.gauge, 0.0, ""};

  // The residual of the projection onto a slightly smaller gauge ball points
  // along a maximizer of <W, X> over the dual unit ball.
  const double tau = (1.0 - cfg.eta) * cont.best.gauge;
  const double bn = solver.target().norm();
  const GaugeFixedResult dir =
      solver.solve_fixed(tau, cont.best.atoms, cfg.direction_gap_tol * bn * bn);
  const Eigen::VectorXd r = solver.target() - dir.fitted;
  const DenseTensor rt(x.dims(), std::vector<double>(r.data(), r.data() + r.size()));
  const DenseTensor w = stack.project(rt, Projection::q0());
  const SpectralUpper up = incoherent_spectral_upper(w, p, cfg.upper);
  out.spectral_upper = up.value;
  out.upper_method = up.method;
  if (!(up.value > 0.0)) throw Error("dual_atom: projected direction vanished");
  // Projection last, so W0 is in the range of Q0 up to rounding.
  DenseTensor w0 = stack.project((1.0 / up.value) * w, Projection::q0());
  out.pairing = inner(w0, x);
  out.w0 = std::move(w0);
  return out;
}

SubgradReport subgrad_check(const DenseTensor& x, const DenseTensor& y, const DenseTensor& w0,
                            const IncoherenceParams& p, const SubgradConfig& cfg) {
  require_same_dims(x, y, "subgrad_check");
  require_same_dims(x, w0, "subgrad_check");
  const std::size_t k = x.order();
  const ProjectorStack stack(x, cfg.rank_tol);
  const DenseTensor z = stack.project(y, Projection::qperp());
  SubgradReport r;
  r.coefficient = 2.0 / static_cast<double>(k * (k - 1));
  r.nuclear_y_ub = incoherent_nuclear_ub(y, p, cfg.nuclear).value;
  r.pairing_x = inner(w0, x);
  r.pairing_y = inner(w0, y);
  r.perp_hs = hs_norm(z);
  // <Z, Z> <= ||Z||_{*,delta} ||Z||_{o,delta}, so ||Z||_HS^2 / upper(o) is a
  // lower bound on the nuclear-type norm.
  if (r.perp_hs > 1e-12 * std::max(1.0, hs_norm(y))) {
    const double up = incoherent_spectral_upper(z, p, cfg.upper).value;
    r.perp_lower = r.perp_hs * r.perp_hs / up;
  }
  const double rhs = r.pairing_x + r.coefficient * r.perp_lower + (r.pairing_y - r.pairing_x);
  r.margin = r.nuclear_y_ub - rhs;
  return r;
}

namespace {

nlohmann::json atom_json(const RankOneAtom& a) {
  nlohmann::json f = nlohmann::json::array();
  for (const auto& v : a.factors) f.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  return {{"weight", a.weight}, {"factors", f}};
}

}  // namespace

std::string to_json(const SpectralResult& r) {
  nlohmann::json j;
  j["value"] = r.value;
  j["pair"] = {r.pair.first, r.pair.second};
  j["restarts_used"] = r.restarts_used;
  j["atom"] = atom_json(r.atom);
  return j.dump();
}

std::string to_json(const NuclearResult& r) {
  nlohmann::json j;
  j["value"] = r.value;
  j["residual"] = r.residual_hs;
  j["gap"] = r.gap;
  j["status"] = r.status == SolveStatus::converged ? "converged" : "not_converged";
  nlohmann::json atoms = nlohmann::json::array();
  for (std::size_t i = 0; i < r.atoms.size(); ++i) {
    nlohmann::json a = atom_json(r.atoms[i]);
    if (i < r.pairs.size()) a["pair"] = {r.pairs[i].first, r.pairs[i].second};
    atoms.push_back(a);
  }
  j["atoms"] = atoms;
  return j.dump();
}

}  // namespace itc
