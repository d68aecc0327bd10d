#include "itc/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "itc/rng.hpp"

namespace itc {

namespace {

// (prod d / n) * multiplicity on each listed cell
std::vector<double> sampling_weights(const SampleSet& s) {
  const std::size_t total = product(s.dims());
  std::vector<double> w(total, 0.0);
  const double scale = static_cast<double>(total) / static_cast<double>(s.size());
  for (std::size_t f : s.flat()) w[f] += scale;
  return w;
}

DenseTensor deviation(const DenseTensor& x, const std::vector<double>& w) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (w[i] - 1.0) * x.flat(i);
  return DenseTensor(x.dims(), std::move(out));
}

void check_inputs(const DenseTensor& t, const SampleSet& s) {
  if (t.dims() != s.dims()) throw Error("certificate: sample shape mismatch");
  if (s.empty()) throw Error("certificate: empty sample");
  if (t.is_zero()) throw Error("certificate: zero tensor");
}

Eigen::MatrixXd sampled_basis_rows(const Eigen::MatrixXd& basis, const std::vector<std::size_t>& cells) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(cells.size()), basis.cols());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    rows.row(static_cast<Eigen::Index>(i)) = basis.row(static_cast<Eigen::Index>(cells[i]));
  }
  return rows;
}

}  // namespace

double tangent_op_norm_dev(const DenseTensor& t, const SampleSet& s, int iters,
                           std::uint64_t seed, int restarts) {
  check_inputs(t, s);
  const ProjectorStack st(t);
  const std::vector<double> w = sampling_weights(s);
  double best = 0.0;
  for (int r = 0; r < restarts; ++r) {
    CounterRng rng(seed, 0xce27 + static_cast<std::uint64_t>(r));
    std::vector<double> g(t.size());
    for (auto& v : g) v = rng.normal();
    DenseTensor x = st.project(DenseTensor(t.dims(), std::move(g)), Projection::q());
    double nx = hs_norm(x);
    if (nx == 0.0) continue;
    x = (1.0 / nx) * x;
    for (int it = 0; it < iters; ++it) {
      const DenseTensor y = st.project(deviation(x, w), Projection::q());
      best = std::max(best, std::abs(inner(x, y)));
      const double ny = hs_norm(y);
      if (ny == 0.0) break;
      x = (1.0 / ny) * y;
    }
  }
  return best;
}

double tangent_op_norm_dev_exact(const DenseTensor& t, const SampleSet& s) {
  check_inputs(t, s);
  if (t.size() > 10000) throw Error("tangent_op_norm_dev_exact: size guard exceeded");
  const ProjectorStack st(t);
  const Eigen::MatrixXd b = st.tangent_basis();
  const std::vector<double> w = sampling_weights(s);
  Eigen::VectorXd dev(static_cast<Eigen::Index>(w.size()));
  for (std::size_t i = 0; i < w.size(); ++i) dev(static_cast<Eigen::Index>(i)) = w[i] - 1.0;
  const Eigen::MatrixXd m = b.transpose() * dev.asDiagonal() * b;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double tangent_sampling_lower(const DenseTensor& t, const SampleSet& s) {
  check_inputs(t, s);
  const ProjectorStack st(t);
  const Eigen::MatrixXd b = st.tangent_basis();
  const std::vector<std::size_t> cells = s.distinct();
  if (cells.size() < static_cast<std::size_t>(b.cols())) return 0.0;
  const Eigen::MatrixXd rows = sampled_basis_rows(b, cells);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows);
  return svd.singularValues().minCoeff();
}

CertificateReport golfing_certificate(const DenseTensor& t, const SampleSet& batches,
                                      const IncoherenceParams& p, const CertificateConfig& cfg,
                                      const DenseTensor* estimate) {
  check_inputs(t, batches);
  if (!batches.batch_bounds()) throw Error("golfing_certificate: sample has no batches");
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0 && cfg.tau1 > 0.0 && cfg.tau1 < 1.0)) {
    throw Error("golfing_certificate: tau must lie in (0, 1)");
  }
  const std::size_t k = t.order();
  const double total = static_cast<double>(t.size());
  const double kk = static_cast<double>(k * (k - 1));
  const ProjectorStack st(t);

  CertificateReport r;
  r.n2 = batches.batch_bounds()->size();
  r.n1 = batches.batch_bounds()->front().second - batches.batch_bounds()->front().first;
  r.n_iid = batches.size();
  const SampleSet omega = distinct_support(batches);
  r.n = omega.size();

  if (t.size() <= cfg.exact_cap) {
    r.op_dev = tangent_op_norm_dev_exact(t, omega);
    r.op_dev_method = "exact";
    r.proj_lower = tangent_sampling_lower(t, omega);
  } else {
    r.op_dev = tangent_op_norm_dev(t, omega, cfg.power_iters, cfg.seed);
    r.op_dev_method = "power";
    // spectrum of the rescaled operator within [1 - dev, 1 + dev]
    r.proj_lower = std::sqrt(std::max(0.0, 1.0 - r.op_dev) * static_cast<double>(r.n) / total);
  }
  r.proj_rhs = std::sqrt(static_cast<double>(r.n) / (2.0 * total));
  r.pass_proj = r.proj_lower >= r.proj_rhs;

  const DualAtomResult da = dual_atom(t, p, cfg.dual);
  const DenseTensor& w0 = da.w0;
  if (w0.is_zero()) throw Error("golfing_certificate: degenerate W0");

  DenseTensor w = w0;
  DenseTensor g = DenseTensor::zeros(t.dims());
  DenseTensor sum_rw = DenseTensor::zeros(t.dims());
  r.w_hs.push_back(hs_norm(w0));
  r.w_max.push_back(w0.max_abs());
  for (std::size_t j = 0; j < r.n2; ++j) {
    // (I - R_j) W_{j-1} is the batch-rescaled sample of W_{j-1}
    const DenseTensor sw = cfg.zero_deviation ? w : sampled_mean(w, batches.batch(j));
    const DenseTensor rw = w - sw;
    g = g + sw;
    sum_rw = sum_rw + rw;
    w = st.project(rw, Projection::q());
    r.w_hs.push_back(hs_norm(w));
    r.w_max.push_back(w.max_abs());
    const DenseTensor tele = st.project(g, Projection::q()) - w0 + w;
    r.telescoping_err = std::max(r.telescoping_err, tele.max_abs());
  }

  r.support_ok = true;
  {
    std::vector<bool> on(t.size(), false);
    for (std::size_t f : omega.flat()) on[f] = true;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!on[i] && g.flat(i) != 0.0) r.support_ok = false;
    }
  }

  r.cond_a_lhs = hs_norm(st.project(g, Projection::q()) - w0);
  r.cond_a_rhs = r.proj_rhs / kk;
  r.pass_a = r.cond_a_lhs < r.cond_a_rhs;

  r.cond_b_rhs = 1.0 / kk;
  if (sum_rw.is_zero()) {
    r.cond_b_method = "zero";
  } else {
    const SpectralUpper up = incoherent_spectral_upper(sum_rw, p, cfg.upper);
    r.cond_b_lhs = up.value;
    r.cond_b_lower = up.lower;
    r.cond_b_method = up.method;
  }
  r.pass_b = r.cond_b_lhs < r.cond_b_rhs;
  r.pass = r.pass_proj && r.pass_a && r.pass_b;

  r.decay_hs_ok = r.decay_max_ok = true;
  std::vector<double> ratios;
  for (std::size_t j = 1; j < r.w_hs.size(); ++j) {
    const double jj = static_cast<double>(j);
    if (r.w_hs[j] > std::pow(cfg.tau1, jj) * r.w_hs[0] * (1 + 1e-12)) r.decay_hs_ok = false;
    if (r.w_max[j] > std::pow(cfg.tau, jj) * r.w_max[0] * (1 + 1e-12)) r.decay_max_ok = false;
    if (r.w_hs[j - 1] > 0.0) ratios.push_back(r.w_hs[j] / r.w_hs[j - 1]);
  }
  if (!ratios.empty()) {
    std::sort(ratios.begin(), ratios.end());
    const std::size_t m = ratios.size();
    r.median_hs_ratio = m % 2 ? ratios[m / 2] : 0.5 * (ratios[m / 2 - 1] + ratios[m / 2]);
  }

  if (estimate) {
    require_same_dims(*estimate, t, "golfing_certificate");
    r.recovery_err = hs_norm(*estimate - t) / hs_norm(t);
    r.contradiction = r.pass && *r.recovery_err > cfg.recovery_tol;
  }
  return r;
}

std::string to_json(const CertificateReport& r) {
  nlohmann::json j;
  j["n"] = r.n;
  j["n_iid"] = r.n_iid;
  j["n1"] = r.n1;
  j["n2"] = r.n2;
  j["op_dev"] = r.op_dev;
  j["op_dev_method"] = r.op_dev_method;
  j["proj_lower"] = r.proj_lower;
  j["proj_rhs"] = r.proj_rhs;
  j["cond_a_lhs"] = r.cond_a_lhs;
  j["cond_a_rhs"] = r.cond_a_rhs;
  j["cond_b_lhs"] = r.cond_b_lhs;
  j["cond_b_lower"] = r.cond_b_lower;
  j["cond_b_method"] = r.cond_b_method;
  j["cond_b_rhs"] = r.cond_b_rhs;
  j["w_hs"] = r.w_hs;
  j["w_max"] = r.w_max;
  j["telescoping_err"] = r.telescoping_err;
  j["support_ok"] = r.support_ok;
  j["decay_hs_ok"] = r.decay_hs_ok;
  j["decay_max_ok"] = r.decay_max_ok;
  j["median_hs_ratio"] = r.median_hs_ratio;
  j["pass_proj"] = r.pass_proj;
  j["pass_a"] = r.pass_a;
  j["pass_b"] = r.pass_b;
  j["pass"] = r.pass;
  if (r.recovery_err) j["recovery_err"] = *r.recovery_err;
  j["contradiction"] = r.contradiction;
  return j.dump();
}

std::string certificate_csv_header() {
  return "n,n_iid,n1,n2,op_dev,op_dev_method,proj_lower,proj_rhs,cond_a_lhs,cond_a_rhs,"
         "cond_b_lhs,cond_b_method,cond_b_rhs,telescoping_err,median_hs_ratio,pass_proj,"
         "pass_a,pass_b,pass,recovery_err,contradiction";
}

std::string to_csv_row(const CertificateReport& r) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << r.n << ',' << r.n_iid << ',' << r.n1 << ',' << r.n2 << ',' << r.op_dev << ','
     << r.op_dev_method << ',' << r.proj_lower << ',' << r.proj_rhs << ',' << r.cond_a_lhs << ','
     << r.cond_a_rhs << ',' << r.cond_b_lhs << ',' << r.cond_b_method << ',' << r.cond_b_rhs << ','
     << r.telescoping_err << ',' << r.median_hs_ratio << ',' << r.pass_proj << ',' << r.pass_a
     << ',' << r.pass_b << ',' << r.pass << ',';
  if (r.recovery_err) os << *r.recovery_err;
  os << ',' << r.contradiction;
  return os.str();
}

}  // namespace itc
