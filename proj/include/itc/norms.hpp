#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "itc/coord_tensor.hpp"
#include "itc/tensor.hpp"

namespace itc {

/// Per-mode incoherence radii. Values are clamped into [1/sqrt(d_j), 1];
/// clamped() reports whether any input had to move.
class IncoherenceParams {
 public:
  IncoherenceParams(std::vector<double> delta, const Dims& dims);
  static IncoherenceParams ones(const Dims& dims);

  std::size_t order() const { return delta_.size(); }
  double operator[](std::size_t j) const { return delta_.at(j); }
  const std::vector<double>& delta() const { return delta_; }
  const Dims& dims() const { return dims_; }
  bool clamped() const { return clamped_; }

  /// (delta_1 ... delta_k)^(1/k)
  double delta_star() const;
  /// min over pairs of sqrt(delta_a delta_b)
  double delta_star_star() const;

 private:
  std::vector<double> delta_;
  Dims dims_;
  bool clamped_ = false;
};

struct LinmaxResult {
  Eigen::VectorXd u;
  double value = 0.0;
};

/// argmax <u, g> over {||u||_2 <= 1, ||u||_inf <= delta}.
LinmaxResult linmax_box_ball(const Eigen::VectorXd& g, double delta);

/// True when u lies in U_{ab}(delta): every factor in the unit ball and every
/// factor outside the free pair (a, b) in the delta box.
bool atom_feasible(const RankOneAtom& atom, const IncoherenceParams& p,
                   std::size_t a, std::size_t b, double tol = 1e-12);

struct SpectralConfig {
  int restarts = 20;
  int max_sweeps = 200;
  double stall_tol = 1e-12;
  bool hosvd_init = true;
  std::uint64_t seed = 0;
};

struct SpectralResult {
  double value = 0.0;
  RankOneAtom atom;
  std::pair<std::size_t, std::size_t> pair{0, 1};
  int restarts_used = 0;
};

/// Extra starting point for the alternating maximization; applied to every
/// pair unless restricted to one.
struct SpectralStart {
  std::vector<Eigen::VectorXd> factors;
};

SpectralResult incoherent_spectral_lb(const DenseTensor& x, const IncoherenceParams& p,
                                      const SpectralConfig& cfg = {});
SpectralResult incoherent_spectral_lb(const CoordTensor& x, const IncoherenceParams& p,
                                      const SpectralConfig& cfg,
                                      std::span<const SpectralStart> extra_starts = {});

// Quantized nets over {||u||_2 <= c, ||u||_inf <= delta}.

inline constexpr double kNetGuard = 1e7;

/// Number of levels minus one: the m with 2^(m/2) < delta sqrt(d) <= 2^((m+1)/2).
int net_levels(std::size_t d, double delta);

/// exp(1.344 + 3.082 d)
double net_cardinality_bound(std::size_t d);

/// Exact size of the net, computed without enumerating it.
std::uint64_t net_cardinality(std::size_t d, double delta);

/// Every sign-and-level vector with ||w||_2 <= c. Rejects nets whose exact
/// size exceeds kNetGuard unless guard_override is set.
std::vector<Eigen::VectorXd> enumerate_net(std::size_t d, double delta, double c = 1.0,
                                           bool guard_override = false);

struct NetBracket {
  double lower = 0.0;
  double upper = 0.0;
  double net_size = 0.0;
  RankOneAtom atom;  // feasible atom attaining `lower`
  std::pair<std::size_t, std::size_t> pair{0, 1};
};

struct BracketConfig {
  bool guard_override = false;
  /// Cap on (net vectors per pair) x (pairs); sizes above it are rejected.
  double max_evaluations = 1e8;
};

NetBracket incoherent_spectral_bracket(const DenseTensor& x, const IncoherenceParams& p,
                                       const BracketConfig& cfg = {});

/// Certified upper bound on ||W||_{o,delta}. `method` names the route that
/// produced the bound: "exact" (k = 2), "core" (Tucker core with a circle net),
/// "net" (net bracket), or "lb-safety" (2^(k-2) times the lower bound; not
/// certified, used only when neither route applies).
struct SpectralUpper {
  double value = 0.0;
  double lower = 0.0;
  std::string method;
};

struct UpperConfig {
  BracketConfig bracket;
  SpectralConfig lb;
  /// Circle net points for a rank-2 core mode when k = 3.
  int circle_points = 20000;
  double core_rank_tol = 1e-12;
  /// Skip the net bracket when it would need more contractions than this.
  double net_budget = 2e5;
};

SpectralUpper incoherent_spectral_upper(const DenseTensor& w, const IncoherenceParams& p,
                                        const UpperConfig& cfg = {});

/// Upper bound on the ordinary spectral norm via the Tucker core. Returns a
/// negative value when the core is too large for the circle net.
double core_spectral_upper(const DenseTensor& w, int circle_points = 20000,
                           double rank_tol = 1e-12);

enum class SolveStatus { converged, not_converged };

struct NuclearConfig {
  std::size_t max_atoms = 500;
  double gap_tol = 1e-8;     // relative to ||X||_HS^2
  double feas_tol = 1e-6;    // relative to ||X||_HS
  int bisection_steps = 40;
  double bisection_rel_width = 1e-9;
  int max_fw_iters = 400;
  int refine_sweeps = 3;
  SpectralConfig lmo{4, 200, 1e-12, true, 0};
};

struct NuclearResult {
  double value = 0.0;
  std::vector<RankOneAtom> atoms;  // signed weights in RankOneAtom::weight
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double residual_hs = 0.0;
  double gap = 0.0;
  SolveStatus status = SolveStatus::converged;
  /// Largest tau certified or observed infeasible during continuation.
  double tau_infeasible = 0.0;
};

NuclearResult incoherent_nuclear_ub(const DenseTensor& x, const IncoherenceParams& p,
                                    const NuclearConfig& cfg = {});

struct DualAtomConfig {
  NuclearConfig nuclear;
  /// The dual direction is read off the projection onto the gauge ball of
  /// radius (1 - eta) times the computed gauge.
  double eta = 1e-3;
  double direction_gap_tol = 1e-14;
  UpperConfig upper;
  double hypothesis_tol = 1e-12;
};

struct DualAtomResult {
  DenseTensor w0;
  double pairing = 0.0;
  double nuclear_value = 0.0;
  double spectral_upper = 0.0;  // of the unscaled projected direction
  std::string upper_method;
};

DualAtomResult dual_atom(const DenseTensor& x, const IncoherenceParams& p,
                         const DualAtomConfig& cfg = {});

struct SubgradReport {
  double margin = 0.0;
  double nuclear_y_ub = 0.0;       // upper bound on ||Y||_{*,delta}
  double pairing_x = 0.0;          // <W0, X>
  double pairing_y = 0.0;          // <W0, Y>
  double perp_lower = 0.0;         // lower bound on ||Q_perp Y||_{*,delta}
  double perp_hs = 0.0;            // ||Q_perp Y||_HS
  double coefficient = 0.0;        // 2 / (k (k - 1))
};

struct SubgradConfig {
  NuclearConfig nuclear;
  UpperConfig upper;
  double rank_tol = 1e-10;
};

SubgradReport subgrad_check(const DenseTensor& x, const DenseTensor& y,
                            const DenseTensor& w0, const IncoherenceParams& p,
                            const SubgradConfig& cfg = {});

std::string to_json(const SpectralResult& r);
std::string to_json(const NuclearResult& r);

}  // namespace itc
