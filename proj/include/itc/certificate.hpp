#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "itc/norms.hpp"
#include "itc/sampling.hpp"
#include "itc/subspace.hpp"

namespace itc {

/// Lower estimate of ||Q_T ((prod d / n) sum_i P_{omega_i} - I) Q_T|| by power
/// iteration from `restarts` random starts. Each listed sample counts once,
/// so a without-replacement set gives the (prod d / |Omega|) P_Omega operator.
double tangent_op_norm_dev(const DenseTensor& t, const SampleSet& s, int iters,
                           std::uint64_t seed = 0, int restarts = 3);

/// Same quantity from the eigenvalues of the operator restricted to an
/// orthonormal basis of range(Q_T). Guarded to prod d <= 1e4.
double tangent_op_norm_dev_exact(const DenseTensor& t, const SampleSet& s);

/// min ||P_Omega Q_T X||_HS / ||Q_T X||_HS over the distinct cells of s.
double tangent_sampling_lower(const DenseTensor& t, const SampleSet& s);

struct CertificateConfig {
  std::size_t n1 = 0;  // used by callers that draw batches
  std::size_t n2 = 0;
  double tau = 0.5;   // per-step max-norm contraction target
  double tau1 = 0.5;  // per-step HS contraction target
  int power_iters = 200;
  std::uint64_t seed = 0;
  double telescoping_tol = 1e-10;
  double recovery_tol = 1e-3;  // relative HS error counted as recovered
  std::size_t exact_cap = 10000;
  DualAtomConfig dual;
  UpperConfig upper;
  bool zero_deviation = false;  // test hook: every R_j is replaced by 0
};

struct CertificateReport {
  std::size_t n = 0;        // distinct sampled cells
  std::size_t n_iid = 0;    // n1 * n2
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  double op_dev = 0.0;
  std::string op_dev_method;  // "exact" or "power" (lower estimate)
  double proj_lower = 0.0;    // min ||P_Omega Q_T X|| / ||Q_T X||
  double proj_rhs = 0.0;      // sqrt(n / (2 prod d))
  double cond_a_lhs = 0.0;    // ||Q_T G - W0||_HS
  double cond_a_rhs = 0.0;    // sqrt(n / (2 prod d)) / (k (k - 1))
  double cond_b_lhs = 0.0;    // upper bound of ||sum_l R_l W_{l-1}||_{o,delta}
  double cond_b_lower = 0.0;
  std::string cond_b_method;
  double cond_b_rhs = 0.0;  // 1 / (k (k - 1))
  std::vector<double> w_hs;   // ||W_j||_HS, j = 0..n2
  std::vector<double> w_max;  // ||W_j||_max
  double telescoping_err = 0.0;  // max_j max|Q_T G_j - W0 + W_j|
  bool support_ok = false;       // G vanishes off the sampled cells
  bool decay_hs_ok = false;      // ||W_j||_HS <= tau1^j ||W0||_HS
  bool decay_max_ok = false;     // ||W_j||_max <= tau^j ||W0||_max
  double median_hs_ratio = 0.0;
  bool pass_proj = false;
  bool pass_a = false;
  bool pass_b = false;
  bool pass = false;
  std::optional<double> recovery_err;
  bool contradiction = false;  // all conditions pass but the estimate missed T
};

/// Golfing-scheme dual certificate built from the batches of `batches`
/// (with batch_bounds). `estimate`, when given, is the solver output checked
/// for contradiction with a passing certificate.
CertificateReport golfing_certificate(const DenseTensor& t, const SampleSet& batches,
                                      const IncoherenceParams& p, const CertificateConfig& cfg,
                                      const DenseTensor* estimate = nullptr);

std::string to_json(const CertificateReport& r);
std::string certificate_csv_header();
std::string to_csv_row(const CertificateReport& r);

}  // namespace itc
