#include <sstream>

#include <gtest/gtest.h>

#include "itc/tensor.hpp"
#include "test_util.hpp"

using namespace itc;
using itc::tu::random_dense;

TEST(DenseTensor, IdentityMatrix) {
  DenseTensor t({2, 2}, {1, 0, 0, 1});
  EXPECT_EQ(t({0, 0}), 1.0);
  EXPECT_EQ(t({0, 1}), 0.0);
  EXPECT_EQ(t({1, 1}), 1.0);
}

TEST(DenseTensor, ZeroTensorHasZeroNorm) {
  const DenseTensor z = DenseTensor::zeros({2, 2, 2});
  EXPECT_EQ(hs_norm(z), 0.0);
  EXPECT_TRUE(z.is_zero());
}

TEST(DenseTensor, RejectsBadInput) {
  try {
    DenseTensor t({2, 3}, std::vector<double>(5, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("length mismatch"), std::string::npos);
  }
  EXPECT_THROW(DenseTensor({}, {}), Error);
  EXPECT_THROW(DenseTensor({2, 1}, {1.0, std::nan("")}), Error);
  EXPECT_THROW(DenseTensor({2, 0}, {}), Error);
}

TEST(Inner, Examples) {
  DenseTensor a({2, 2}, {1, 2, 3, 4});
  DenseTensor i({2, 2}, {1, 0, 0, 1});
  EXPECT_EQ(inner(a, i), 5.0);
  DenseTensor e11({2, 2}, {1, 0, 0, 0});
  DenseTensor e22({2, 2}, {0, 0, 0, 1});
  EXPECT_EQ(inner(e11, e22), 0.0);
  EXPECT_NEAR(inner(a, a), hs_norm(a) * hs_norm(a), 1e-12);
  EXPECT_THROW(inner(a, DenseTensor::zeros({2, 3})), Error);
}

TEST(Inner, SymmetricBilinear) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto x = random_dense({3, 4, 2}, 3 * s);
    const auto y = random_dense({3, 4, 2}, 3 * s + 1);
    const auto z = random_dense({3, 4, 2}, 3 * s + 2);
    const double scale = hs_norm(x) * (hs_norm(y) + hs_norm(z));
    EXPECT_NEAR(inner(x, y), inner(y, x), 1e-12 * scale);
    EXPECT_NEAR(inner(x, axpy(y, 2.5, z)), inner(x, y) + 2.5 * inner(x, z), 1e-12 * 3 * scale);
  }
}

TEST(HsNorm, Examples) {
  EXPECT_EQ(hs_norm(DenseTensor({2, 1}, {3, 4})), 5.0);
  const auto x = random_dense({3, 3}, 5);
  EXPECT_NEAR(hs_norm(-3.0 * x), 3.0 * hs_norm(x), 1e-14 * hs_norm(x));
}

TEST(Atom, Examples) {
  RankOneAtom a{{tu::basis_vector(2, 0), tu::basis_vector(2, 0)}, 1.0};
  const auto t = atom_to_tensor(a, {2, 2});
  EXPECT_EQ(t.values()[0], 1.0);
  EXPECT_EQ(hs_norm(t), 1.0);

  a.weight = 0.0;
  EXPECT_TRUE(atom_to_tensor(a, {2, 2}).is_zero());

  Eigen::VectorXd u(2), v(2);
  u << 1, 0;
  v << 0.6, 0.8;
  const auto w = atom_to_tensor(RankOneAtom{{u, v}, 2.0}, {2, 2});
  EXPECT_NEAR(w({0, 0}), 1.2, 1e-15);
  EXPECT_NEAR(w({0, 1}), 1.6, 1e-15);
  EXPECT_EQ(w({1, 0}), 0.0);
  EXPECT_THROW(atom_to_tensor(a, {2, 3}), Error);
}

TEST(Atom, NormIsProductOfFactorNorms) {
  CounterRng rng(11);
  for (int t = 0; t < 20; ++t) {
    RankOneAtom a;
    double prod = 1.0;
    for (std::size_t d : {3u, 4u, 2u, 5u}) {
      Eigen::VectorXd u = 0.7 * tu::random_unit(d, rng) * (1.0 + rng.uniform());
      prod *= u.norm();
      a.factors.push_back(u);
    }
    a.weight = -1.5;
    EXPECT_NEAR(hs_norm(atom_to_tensor(a, {3, 4, 2, 5})), 1.5 * prod, 1e-12 * prod);
  }
}

TEST(Unfold, RankOneGivesRankOneMatrix) {
  CounterRng rng(3);
  RankOneAtom a{{tu::random_unit(3, rng), tu::random_unit(4, rng),
                 tu::random_unit(2, rng)}, 1.0};
  const auto t = atom_to_tensor(a, {3, 4, 2});
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(tu::gauss_rank(unfold(t, j)), 1u);
  }
  // Mode-0 unfolding is u vec(v (x) w)^T.
  const Eigen::MatrixXd m = unfold(t, 0);
  Eigen::VectorXd vw(8);
  for (int i = 0; i < 4; ++i)
    for (int l = 0; l < 2; ++l) vw(i * 2 + l) = a.factors[1](i) * a.factors[2](l);
  EXPECT_LT((m - a.factors[0] * vw.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Unfold, RefoldIsExactInverse) {
  const auto x = random_dense({3, 2, 4, 2}, 9);
  for (std::size_t j = 0; j < 4; ++j) {
    const auto back = refold(unfold(x, j), x.dims(), j);
    EXPECT_TRUE(std::equal(back.values().begin(), back.values().end(), x.values().begin()));
  }
  EXPECT_THROW(unfold(x, 4), Error);
}

TEST(Unfold, IdentityTranspose) {
  DenseTensor i({2, 2}, {1, 0, 0, 1});
  EXPECT_EQ(unfold(i, 1), Eigen::MatrixXd::Identity(2, 2));
}

TEST(Tnsr1, RoundTrip) {
  const auto x = random_dense({2, 3, 2}, 4);
  std::stringstream ss;
  write_tnsr1(ss, x);
  const auto y = read_tnsr1(ss);
  EXPECT_EQ(y.dims(), x.dims());
  EXPECT_TRUE(std::equal(y.values().begin(), y.values().end(), x.values().begin()));
}

TEST(Tnsr1, AcceptsArbitraryWhitespace) {
  std::stringstream ss("2\n2   2\n1\t2\n\n3 4  ");
  const auto y = read_tnsr1(ss);
  EXPECT_EQ(y({1, 0}), 3.0);
  std::stringstream bad("2\n2 2\n1 2 3");
  EXPECT_THROW(read_tnsr1(bad), Error);
}
