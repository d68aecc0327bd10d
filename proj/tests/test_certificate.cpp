#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "itc/certificate.hpp"
#include "itc/completion.hpp"
#include "test_util.hpp"

using namespace itc;

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Eigen::MatrixXd oracle_unfold(const DenseTensor& t, std::size_t mode) {
  const Dims& d = t.dims();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d[mode]),
                                            static_cast<Eigen::Index>(t.size() / d[mode]));
  std::vector<std::size_t> col(d[mode], 0);
  for (std::size_t f = 0; f < t.size(); ++f) {
    const MultiIndex idx = unflatten(d, f);
    m(static_cast<Eigen::Index>(idx[mode]), static_cast<Eigen::Index>(col[idx[mode]]++)) = t.flat(f);
  }
  return m;
}

// Q_T = P_1 (x) ... (x) P_k + sum_j (I - P_j) (x) prod_{i != j} P_i, as a dense matrix
Eigen::MatrixXd tangent_oracle(const DenseTensor& t) {
  const std::size_t k = t.order();
  std::vector<Eigen::MatrixXd> p(k);
  for (std::size_t j = 0; j < k; ++j) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(oracle_unfold(t, j), Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > 1e-10 * s(0)) ++r;
    const Eigen::MatrixXd u = svd.matrixU().leftCols(r);
    p[j] = u * u.transpose();
  }
  auto chain = [&](std::size_t perp) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Ones(1, 1);
    for (std::size_t j = 0; j < k; ++j) {
      const Eigen::MatrixXd f =
          j == perp ? Eigen::MatrixXd(Eigen::MatrixXd::Identity(p[j].rows(), p[j].cols()) - p[j])
                    : p[j];
      m = kron(m, f);
    }
    return m;
  };
  Eigen::MatrixXd q = chain(k);
  for (std::size_t j = 0; j < k; ++j) q += chain(j);
  return q;
}

Eigen::VectorXd weights(const SampleSet& s) {
  const double total = static_cast<double>(product(s.dims()));
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
  for (std::size_t f : s.flat()) w(static_cast<Eigen::Index>(f)) += total / static_cast<double>(s.size());
  return w;
}

double oracle_op_dev(const DenseTensor& t, const SampleSet& s) {
  const Eigen::MatrixXd q = tangent_oracle(t);
  const Eigen::VectorXd dev = weights(s).array() - 1.0;
  const Eigen::MatrixXd m = q * dev.asDiagonal() * q;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::VectorXd vec(const DenseTensor& t) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) v(static_cast<Eigen::Index>(i)) = t.flat(i);
  return v;
}

IncoherenceParams params_for(const DenseTensor& t) {
  return IncoherenceParams(recovery_params(t).delta, t.dims());
}

}  // namespace

TEST(TangentOracle, RankMatchesBasis) {
  const DenseTensor t = tu::random_tucker({3, 4, 3}, {2, 2, 1}, 5);
  const Eigen::MatrixXd q = tangent_oracle(t);
  EXPECT_LT((q * q - q).cwiseAbs().maxCoeff(), 1e-10);
  const ProjectorStack st(t);
  EXPECT_EQ(static_cast<Eigen::Index>(std::lround(q.trace())), st.tangent_basis().cols());
}

TEST(OpDev, ExhaustiveIsZero) {
  const DenseTensor t = tu::random_tucker({3, 3, 3}, {2, 2, 2}, 1);
  const SampleSet all = sample_omega(t.dims(), 27, Replacement::without, 3);
  EXPECT_LT(tangent_op_norm_dev_exact(t, all), 1e-12);
  EXPECT_LT(tangent_op_norm_dev(t, all, 50), 1e-12);
  EXPECT_NEAR(tangent_sampling_lower(t, all), 1.0, 1e-12);
}

TEST(OpDev, SingleSampleMatchesDenseOracle) {
  const Dims dims{2, 2, 2};
  const DenseTensor t(dims, {1, 0, 0, 0, 0, 0, 0, 0});
  for (std::size_t f = 0; f < 8; ++f) {
    const SampleSet s(dims, {f}, Replacement::without);
    EXPECT_NEAR(tangent_op_norm_dev_exact(t, s), oracle_op_dev(t, s), 1e-12) << f;
  }
  // the sampled cell lies in the tangent space: 8 - 1 = 7 on it
  const SampleSet s(dims, {0}, Replacement::without);
  EXPECT_NEAR(tangent_op_norm_dev_exact(t, s), 7.0, 1e-12);
}

TEST(OpDev, ExactMatchesOracleAndPowerIteration) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const DenseTensor t = tu::random_tucker({3, 4, 3}, {2, 2, 1}, seed);
    for (Replacement rep : {Replacement::with, Replacement::without}) {
      const SampleSet s = sample_omega(t.dims(), 14, rep, 40 + seed);
      const double exact = tangent_op_norm_dev_exact(t, s);
      EXPECT_NEAR(exact, oracle_op_dev(t, s), 1e-10 * std::max(1.0, exact));
      const double power = tangent_op_norm_dev(t, s, 3000, seed, 4);
      EXPECT_LE(power, exact * (1 + 1e-12));
      EXPECT_NEAR(power, exact, 1e-6 * exact);
    }
  }
}

TEST(OpDev, ExactGuard) {
  const DenseTensor t = tu::random_tucker({22, 22, 22}, {1, 1, 1}, 0);
  const SampleSet s = sample_omega(t.dims(), 5, Replacement::without, 0);
  EXPECT_THROW(tangent_op_norm_dev_exact(t, s), Error);
}

TEST(SamplingLower, MatchesOracle) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const DenseTensor t = tu::random_tucker({3, 3, 4}, {1, 2, 2}, seed);
    const SampleSet s = sample_omega(t.dims(), 30, Replacement::without, seed);
    const Eigen::MatrixXd q = tangent_oracle(t);
    const auto m = static_cast<Eigen::Index>(std::lround(q.trace()));
    Eigen::VectorXd mask = Eigen::VectorXd::Zero(q.rows());
    for (std::size_t f : s.flat()) mask(static_cast<Eigen::Index>(f)) = 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q * mask.asDiagonal() * q);
    // eigenvalues ascending; the m-th largest is sigma_min^2 on range(Q_T)
    const double oracle = std::sqrt(std::max(0.0, es.eigenvalues()(q.rows() - m)));
    EXPECT_NEAR(tangent_sampling_lower(t, s), oracle, 1e-9);
  }
  const DenseTensor t = tu::random_tucker({3, 3, 3}, {2, 2, 2}, 0);
  EXPECT_EQ(tangent_sampling_lower(t, sample_omega(t.dims(), 3, Replacement::without, 0)), 0.0);
}

TEST(Golfing, ZeroDeviationHookGivesW0) {
  const DenseTensor t = random_lowrank({4, 4, 4}, LowRankModel::ortho_cp(1), 2);
  const IncoherenceParams p = params_for(t);
  CertificateConfig cfg;
  cfg.zero_deviation = true;
  const SampleSet b = sample_batches(t.dims(), 200, 3, 9);
  const CertificateReport r = golfing_certificate(t, b, p, cfg);
  EXPECT_LT(r.cond_a_lhs, 1e-12);
  EXPECT_EQ(r.cond_b_lhs, 0.0);
  EXPECT_EQ(r.cond_b_method, "zero");
  EXPECT_TRUE(r.pass_a);
  EXPECT_TRUE(r.pass_b);
  ASSERT_EQ(r.w_hs.size(), 4u);
  for (std::size_t j = 1; j < r.w_hs.size(); ++j) EXPECT_EQ(r.w_hs[j], 0.0);
}

TEST(Golfing, SingleBatchUnrolled) {
  const DenseTensor t = random_lowrank({3, 3, 3}, LowRankModel::ortho_cp(1), 4);
  const IncoherenceParams p = params_for(t);
  const SampleSet b = sample_batches(t.dims(), 60, 1, 11);
  const CertificateReport r = golfing_certificate(t, b, p, {});
  const DenseTensor w0 = dual_atom(t, p).w0;
  // G = (27 / 60) sum_i W0(omega_i) e_{omega_i}, W1 = Q_T (W0 - G)
  const Eigen::VectorXd g = weights(b).cwiseProduct(vec(w0));
  const Eigen::MatrixXd q = tangent_oracle(t);
  const Eigen::VectorXd w1 = q * (vec(w0) - g);
  EXPECT_NEAR(r.cond_a_lhs, (q * g - vec(w0)).norm(), 1e-10);
  EXPECT_NEAR(r.w_hs[1], w1.norm(), 1e-10);
  EXPECT_NEAR(r.w_max[1], w1.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(r.w_hs[0], vec(w0).norm(), 1e-12);
  EXPECT_EQ(r.n, distinct_support(b).size());
  EXPECT_EQ(r.n_iid, 60u);
  EXPECT_NEAR(r.cond_a_rhs, std::sqrt(r.n / 54.0) / 6.0, 1e-15);
  EXPECT_NEAR(r.cond_b_rhs, 1.0 / 6.0, 1e-15);
}

TEST(Golfing, TelescopingSupportAndStepContraction) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const DenseTensor t = random_lowrank({4, 3, 4}, LowRankModel::tucker({2, 2, 2}), seed);
    const IncoherenceParams p = params_for(t);
    const SampleSet b = sample_batches(t.dims(), 150, 4, 70 + seed);
    const CertificateReport r = golfing_certificate(t, b, p, {});
    EXPECT_LE(r.telescoping_err, 1e-10 * r.w_max[0]);
    EXPECT_TRUE(r.support_ok);
    ASSERT_EQ(r.w_hs.size(), 5u);
    // ||W_j|| <= ||Q_T R_j Q_T|| ||W_{j-1}|| batch by batch
    for (std::size_t j = 1; j <= 4; ++j) {
      const double dev = tangent_op_norm_dev_exact(t, b.batch(j - 1));
      EXPECT_LE(r.w_hs[j], dev * r.w_hs[j - 1] * (1 + 1e-9) + 1e-14);
    }
  }
}

TEST(Golfing, DenseSamplingPassesAndAgreesWithTruth) {
  const DenseTensor t = random_lowrank({4, 4, 4}, LowRankModel::ortho_cp(1), 0);
  const IncoherenceParams p = params_for(t);
  const SampleSet b = sample_batches(t.dims(), 8000, 3, 100);
  const CertificateReport r = golfing_certificate(t, b, p, {}, &t);
  EXPECT_TRUE(r.pass_proj);
  EXPECT_TRUE(r.pass_a);
  EXPECT_TRUE(r.pass_b);
  EXPECT_TRUE(r.decay_hs_ok);
  EXPECT_LT(r.median_hs_ratio, 0.5);
  ASSERT_TRUE(r.recovery_err.has_value());
  EXPECT_EQ(*r.recovery_err, 0.0);
  EXPECT_FALSE(r.contradiction);
  // a passing certificate next to a wrong estimate is flagged
  const DenseTensor wrong = DenseTensor::zeros(t.dims());
  EXPECT_TRUE(golfing_certificate(t, b, p, {}, &wrong).contradiction);
}

TEST(Golfing, ConditionAFailsWhenSparse) {
  const DenseTensor t = random_lowrank({4, 4, 4}, LowRankModel::ortho_cp(1), 1);
  const SampleSet b = sample_batches(t.dims(), 10, 2, 5);
  const CertificateReport r = golfing_certificate(t, b, params_for(t), {});
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.pass_proj);
}

TEST(Golfing, Errors) {
  const DenseTensor t = random_lowrank({3, 3, 3}, LowRankModel::ortho_cp(1), 0);
  const IncoherenceParams p = params_for(t);
  const SampleSet flat = sample_omega(t.dims(), 5, Replacement::with, 0);
  EXPECT_THROW(golfing_certificate(t, flat, p, {}), Error);
  CertificateConfig bad;
  bad.tau1 = 1.0;
  EXPECT_THROW(golfing_certificate(t, sample_batches(t.dims(), 5, 2, 0), p, bad), Error);
  EXPECT_THROW(golfing_certificate(DenseTensor::zeros(t.dims()), sample_batches(t.dims(), 5, 2, 0),
                                   p, {}),
               Error);
}

TEST(Golfing, CsvRowMatchesHeader) {
  const DenseTensor t = random_lowrank({3, 3, 3}, LowRankModel::ortho_cp(1), 0);
  const CertificateReport r =
      golfing_certificate(t, sample_batches(t.dims(), 30, 2, 1), params_for(t), {});
  auto count = [](const std::string& s) { return std::count(s.begin(), s.end(), ','); };
  EXPECT_EQ(count(to_csv_row(r)), count(certificate_csv_header()));
  EXPECT_NE(to_json(r).find("\"cond_b_method\""), std::string::npos);
}
