#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "itc/norms.hpp"

namespace itc {

/// Atom of U_{ab}(delta) with a signed weight. Modes a and b are free.
struct GaugeAtom {
  std::vector<Eigen::VectorXd> factors;
  std::size_t a = 0;
  std::size_t b = 1;
  double weight = 0.0;
};

struct GaugeSolverConfig {
  double feas_abs = 0.0;  // residual target, absolute
  double gap_abs = 0.0;   // conditional-gradient gap target, absolute
  std::size_t max_atoms = 500;
  int max_iters = 400;
  int refine_sweeps = 3;
  int bisection_steps = 40;
  double bisection_rel_width = 1e-12;
  double continuation_gap_rel = 0.05;
  // Newton proposals are pushed this far (relative) past the predicted root;
  // landing just short of it gives solves that can neither finish nor certify
  double newton_overshoot = 0.0;
  SpectralConfig lmo{4, 200, 1e-12, true, 0};
};

struct GaugeFixedResult {
  std::vector<GaugeAtom> atoms;
  Eigen::VectorXd fitted;  // sum of weighted atoms on the observed entries
  double gauge = 0.0;      // sum |weight|
  double residual = 0.0;   // ||fitted - b||_2
  double gap = 0.0;
  double dual_norm = 0.0;  // oracle value on the last residual
  bool feasible = false;
  bool certified_infeasible = false;
  bool hit_atom_cap = false;
  int iterations = 0;
};

struct GaugeContinuation {
  GaugeFixedResult best;     // feasible solution with the smallest gauge found
  GaugeFixedResult closest;  // smallest residual seen, for reporting failures
  double tau_infeasible = 0.0;
  bool converged = false;
  int solves = 0;
};

/// Minimizes sum |lambda_i| over decompositions sum lambda_i U_i, U_i in
/// U(delta), that match b on a set of observed entries, by conditional
/// gradient on the tau-constrained least-squares problem plus bisection on tau.
class GaugeSolver {
 public:
  /// idx holds the observed multi-indices, k entries per observation.
  GaugeSolver(Dims dims, std::vector<std::uint32_t> idx, Eigen::VectorXd b,
              IncoherenceParams p, GaugeSolverConfig cfg);

  std::size_t observations() const { return static_cast<std::size_t>(b_.size()); }
  const Eigen::VectorXd& target() const { return b_; }

  /// Conditional gradient at fixed tau. Stops when feasible, when the gap
  /// drops below gap_abs or gap_rel times the objective, or when the gap
  /// certifies infeasibility.
  GaugeFixedResult solve_fixed(double tau, std::vector<GaugeAtom> warm, double gap_abs,
                               double gap_rel = 0.0) const;
  GaugeContinuation minimize_gauge() const;

  /// Atom values (unit weight) on the observed entries.
  Eigen::VectorXd evaluate(const GaugeAtom& atom) const;

 private:
  void refit(const Eigen::MatrixXd& a, double tau, Eigen::VectorXd& lam) const;
  void refine(std::vector<GaugeAtom>& atoms, Eigen::VectorXd& resid) const;

  Dims dims_;
  std::vector<std::uint32_t> idx_;
  Eigen::VectorXd b_;
  IncoherenceParams p_;
  GaugeSolverConfig cfg_;
};

DenseTensor assemble(const std::vector<GaugeAtom>& atoms, const Dims& dims);
RankOneAtom to_rank_one(const GaugeAtom& a);

}  // namespace itc
