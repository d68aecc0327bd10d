#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "itc/norms.hpp"
#include "itc/sampling.hpp"

namespace itc {

/// Observed entries of an unknown tensor. `omega` holds the distinct cells
/// (first-occurrence order) and `observed` their values.
struct CompletionProblem {
  Dims dims;
  SampleSet omega;
  std::vector<double> observed;
  IncoherenceParams delta;

  /// Collapses repeated cells; throws when repeats disagree.
  static CompletionProblem from_samples(const SampleSet& s, const std::vector<double>& values,
                                        IncoherenceParams delta);
  /// Observes `truth` on the distinct cells of s.
  static CompletionProblem from_truth(const DenseTensor& truth, const SampleSet& s,
                                      IncoherenceParams delta);
};

struct CompletionConfig {
  double feas_tol = 1e-6;  // relative to ||b||
  // relative to ||b||^2; kept below feas_tol^2 so that a gap stop short of
  // feasibility really means infeasible
  double gap_tol = 1e-13;
  std::size_t max_atoms = 500;
  int max_iters = 200;  // per fixed-tau solve
  int refine_sweeps = 3;
  int bisection_steps = 40;
  double bisection_rel_width = 1e-4;  // gauge excess of the estimate
  SpectralConfig lmo{4, 200, 1e-12, true, 0};
};

struct SolverResult {
  DenseTensor estimate;
  double gauge_value = 0.0;
  double feas_residual = 0.0;  // ||P_Omega X - b|| / ||b||
  SolveStatus status = SolveStatus::converged;
  std::size_t atoms_used = 0;
  double wall_time = 0.0;  // seconds
};

SolverResult complete(const CompletionProblem& p, const CompletionConfig& cfg = {});

struct LowRankModel {
  enum class Kind { tucker, ortho_cp };
  Kind kind = Kind::ortho_cp;
  std::vector<std::size_t> ranks;  // one per mode for tucker, a single r for ortho_cp

  static LowRankModel tucker(std::vector<std::size_t> r) { return {Kind::tucker, std::move(r)}; }
  static LowRankModel ortho_cp(std::size_t r) { return {Kind::ortho_cp, {r}}; }
};

DenseTensor random_lowrank(const Dims& dims, const LowRankModel& model, std::uint64_t seed);

struct RecoveryParams {
  std::vector<std::size_t> tucker_ranks;
  std::vector<double> mu;  // per-mode coherence
  double r_star = 0.0;
  double mu_star = 0.0;
  double alpha_star = 0.0;  // NaN unless computed
  double lambda_star = 0.0;
  std::vector<double> delta;
  double d_bar = 0.0;
  double d_geo = 0.0;
  double max_leverage = 0.0;  // max_omega ||Q_T e_omega||_HS^2
  std::optional<DenseTensor> w0;
};

struct RecoveryConfig {
  double rank_tol = 1e-10;
  std::size_t enumeration_cap = 1000000;
  bool compute_alpha = true;  // needs a dual-atom solve
  DualAtomConfig dual;
};

RecoveryParams recovery_params(const DenseTensor& t, const RecoveryConfig& cfg = {});

/// (1/(k d_bar)) sum_j (d_j / r_j) prod_l r_l, raised to 1/(k-1).
double r_star_of(const Dims& dims, const std::vector<std::size_t>& ranks);

std::string to_json(const SolverResult& r, bool include_estimate = false);

}  // namespace itc
