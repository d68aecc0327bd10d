#include "itc/completion.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "json.hpp"

#include "itc/gauge_solver.hpp"
#include "itc/rng.hpp"
#include "itc/subspace.hpp"

namespace itc {

CompletionProblem CompletionProblem::from_samples(const SampleSet& s,
                                                  const std::vector<double>& values,
                                                  IncoherenceParams delta) {
  if (values.size() != s.size()) throw Error("completion: one value per sample required");
  if (delta.dims() != s.dims()) throw Error("completion: delta does not match dims");
  std::unordered_map<std::size_t, double> seen;
  std::vector<std::size_t> cells;
  std::vector<double> obs;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::size_t f = s.flat()[i];
    auto [it, fresh] = seen.emplace(f, values[i]);
    if (fresh) {
      cells.push_back(f);
      obs.push_back(values[i]);
    } else if (it->second != values[i]) {
      throw Error("completion: contradictory observations of one cell");
    }
  }
  return {s.dims(), SampleSet(s.dims(), std::move(cells), Replacement::without), std::move(obs),
          std::move(delta)};
}

CompletionProblem CompletionProblem::from_truth(const DenseTensor& truth, const SampleSet& s,
                                                IncoherenceParams delta) {
  if (truth.dims() != s.dims()) throw Error("completion: sample shape mismatch");
  std::vector<double> v(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) v[i] = truth.flat(s.flat()[i]);
  return from_samples(s, v, std::move(delta));
}

SolverResult complete(const CompletionProblem& p, const CompletionConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (p.omega.empty()) throw Error("complete: empty sample");
  if (p.observed.size() != p.omega.size()) throw Error("complete: observed length mismatch");
  if (p.delta.dims() != p.dims) throw Error("complete: delta does not match dims");
  const std::size_t k = p.dims.size();
  const std::size_t n = p.omega.size();

  std::vector<std::uint32_t> idx;
  idx.reserve(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t v : p.omega.index(i)) idx.push_back(static_cast<std::uint32_t>(v));
  }
  Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(p.observed.data(),
                                                        static_cast<Eigen::Index>(n));
  const double bn = b.norm();
  GaugeSolverConfig g;
  g.feas_abs = cfg.feas_tol * bn;
  g.gap_abs = cfg.gap_tol * bn * bn;
  g.max_atoms = cfg.max_atoms;
  g.max_iters = cfg.max_iters;
  g.refine_sweeps = cfg.refine_sweeps;
  g.bisection_steps = cfg.bisection_steps;
  g.bisection_rel_width = cfg.bisection_rel_width;
  g.lmo = cfg.lmo;
  g.newton_overshoot = 0.25 * cfg.bisection_rel_width;
  const GaugeSolver solver(p.dims, std::move(idx), b, p.delta, g);
  const GaugeContinuation cont = solver.minimize_gauge();

  SolverResult r{assemble(cont.best.atoms, p.dims)};
  r.gauge_value = cont.best.gauge;
  r.atoms_used = cont.best.atoms.size();
  r.status = cont.converged ? SolveStatus::converged : SolveStatus::not_converged;
  const GaugeFixedResult& shown = cont.converged ? cont.best : cont.closest;
  r.feas_residual = bn > 0.0 ? shown.residual / bn : 0.0;
  if (!cont.converged) {
    r.estimate = assemble(shown.atoms, p.dims);
    r.gauge_value = shown.gauge;
    r.atoms_used = shown.atoms.size();
  }
  if (n == product(p.dims)) {
    // every cell is pinned: the data is the only feasible point
    std::vector<double> full(n);
    for (std::size_t i = 0; i < n; ++i) full[p.omega.flat()[i]] = p.observed[i];
    r.estimate = DenseTensor(p.dims, std::move(full));
    r.feas_residual = 0.0;
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

namespace {

// d x r with orthonormal columns from QR of a Gaussian matrix
Eigen::MatrixXd random_frame(std::size_t d, std::size_t r, CounterRng& rng) {
  Eigen::MatrixXd g(d, r);
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, c) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, r);
  // fix signs so the frame is a function of g alone
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    if (qr.matrixQR()(c, c) < 0) q.col(c) *= -1.0;
  }
  return q;
}

}  // namespace

DenseTensor random_lowrank(const Dims& dims, const LowRankModel& model, std::uint64_t seed) {
  const std::size_t k = dims.size();
  if (k < 2) throw Error("random_lowrank: order must be at least 2");
  CounterRng rng(seed, 0x10a4);
  std::vector<std::size_t> want;
  DenseTensor t = DenseTensor::zeros(dims);
  if (model.kind == LowRankModel::Kind::tucker) {
    if (model.ranks.size() != k) throw Error("random_lowrank: one Tucker rank per mode");
    for (std::size_t j = 0; j < k; ++j) {
      if (model.ranks[j] < 1 || model.ranks[j] > dims[j]) throw Error("random_lowrank: rank out of range");
    }
    std::vector<double> core(product(model.ranks));
    for (auto& c : core) c = rng.normal();
    t = DenseTensor(model.ranks, std::move(core));
    for (std::size_t j = 0; j < k; ++j) t = mode_product(t, j, random_frame(dims[j], model.ranks[j], rng));
    want = model.ranks;
  } else {
    if (model.ranks.size() != 1) throw Error("random_lowrank: ortho_cp takes a single rank");
    const std::size_t r = model.ranks[0];
    for (std::size_t d : dims) {
      if (r < 1 || r > d) throw Error("random_lowrank: rank out of range");
    }
    std::vector<Eigen::MatrixXd> frames;
    for (std::size_t j = 0; j < k; ++j) frames.push_back(random_frame(dims[j], r, rng));
    for (std::size_t i = 0; i < r; ++i) {
      RankOneAtom a;
      for (std::size_t j = 0; j < k; ++j) a.factors.push_back(frames[j].col(static_cast<Eigen::Index>(i)));
      t = t + atom_to_tensor(a, dims);
    }
    want.assign(k, r);
  }
  if (tucker_ranks(t) != want) throw Error("random_lowrank: degenerate draw, ranks differ");
  return t;
}

double r_star_of(const Dims& dims, const std::vector<std::size_t>& ranks) {
  const std::size_t k = dims.size();
  double d_bar = 0.0, prod_r = 1.0;
  for (std::size_t j = 0; j < k; ++j) {
    d_bar += static_cast<double>(dims[j]) / static_cast<double>(k);
    prod_r *= static_cast<double>(ranks[j]);
  }
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) s += static_cast<double>(dims[j]) / static_cast<double>(ranks[j]) * prod_r;
  return std::pow(s / (static_cast<double>(k) * d_bar), 1.0 / static_cast<double>(k - 1));
}

RecoveryParams recovery_params(const DenseTensor& t, const RecoveryConfig& cfg) {
  if (t.is_zero()) throw Error("recovery_params: zero tensor");
  const std::size_t total = t.size();
  if (total > cfg.enumeration_cap) throw Error("recovery_params: enumeration guard exceeded");
  const Dims& dims = t.dims();
  const std::size_t k = t.order();
  const double kd = static_cast<double>(k);

  RecoveryParams rp;
  const ProjectorStack stack(t, cfg.rank_tol);
  rp.tucker_ranks = stack.ranks();
  double log_geo = 0.0;
  for (std::size_t d : dims) {
    rp.d_bar += static_cast<double>(d) / kd;
    log_geo += std::log(static_cast<double>(d)) / kd;
  }
  rp.d_geo = std::exp(log_geo);
  rp.r_star = r_star_of(dims, rp.tucker_ranks);

  for (std::size_t f = 0; f < total; ++f) {
    rp.max_leverage = std::max(rp.max_leverage, stack.tangent_leverage(unflatten(dims, f)));
  }
  rp.mu_star = std::pow(rp.d_geo, kd) / (kd * std::pow(rp.r_star, kd - 1) * rp.d_bar) * rp.max_leverage;

  double mr = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    rp.mu.push_back(coherence(stack.basis(j)));
    mr = std::max(mr, rp.mu.back() * static_cast<double>(rp.tucker_ranks[j]));
  }
  rp.lambda_star = std::max(mr / rp.r_star, 1.0 / rp.r_star);
  for (std::size_t j = 0; j < k; ++j) {
    const double dj = static_cast<double>(dims[j]);
    rp.delta.push_back(std::clamp(std::sqrt(rp.lambda_star * rp.r_star / dj), 1.0 / std::sqrt(dj), 1.0));
  }

  rp.alpha_star = std::numeric_limits<double>::quiet_NaN();
  if (cfg.compute_alpha) {
    DualAtomResult da = dual_atom(t, IncoherenceParams(rp.delta, dims), cfg.dual);
    rp.alpha_star = std::sqrt(std::pow(rp.d_geo, kd) / rp.r_star) * da.w0.max_abs();
    rp.w0 = std::move(da.w0);
  }
  return rp;
}

std::string to_json(const SolverResult& r, bool include_estimate) {
  nlohmann::json j;
  j["gauge"] = r.gauge_value;
  j["feas_residual"] = r.feas_residual;
  j["status"] = r.status == SolveStatus::converged ? "converged" : "not_converged";
  j["atoms"] = r.atoms_used;
  j["secs"] = r.wall_time;
  if (include_estimate) {
    j["dims"] = r.estimate.dims();
    j["estimate"] = std::vector<double>(r.estimate.values().begin(), r.estimate.values().end());
  }
  return j.dump();
}

}  // namespace itc
