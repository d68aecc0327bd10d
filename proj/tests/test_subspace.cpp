#include <cmath>

#include <gtest/gtest.h>

#include "itc/subspace.hpp"
#include "test_util.hpp"

using namespace itc;
using itc::tu::basis_vector;
using itc::tu::random_dense;
using itc::tu::random_tucker;

namespace {

double max_abs(const DenseTensor& t) { return t.max_abs(); }

}  // namespace

TEST(ModeSubspace, RankOne) {
  CounterRng rng(1);
  RankOneAtom a{{tu::random_unit(3, rng), tu::random_unit(4, rng),
                 tu::random_unit(5, rng)}, 1.0};
  const auto t = atom_to_tensor(a, {3, 4, 5});
  for (std::size_t j = 0; j < 3; ++j) {
    const auto b = mode_subspace(t, j);
    ASSERT_EQ(b.rank(), 1u);
    EXPECT_NEAR(std::abs(b.basis.col(0).dot(a.factors[j])), 1.0, 1e-12);
  }
}

TEST(ModeSubspace, IdentityAndZero) {
  DenseTensor i({2, 2}, {1, 0, 0, 1});
  EXPECT_EQ(mode_subspace(i, 0).rank(), 2u);
  EXPECT_THROW(mode_subspace(DenseTensor::zeros({2, 2}), 0), Error);
  EXPECT_THROW(mode_subspace(i, 2), Error);
}

TEST(ModeSubspace, TwoDiagonalAtomsMatchEliminationOracle) {
  std::vector<double> v(27, 0.0);
  v[0] = 1.0;
  v[flatten({3, 3, 3}, {1, 1, 1})] = 1.0;
  const DenseTensor t({3, 3, 3}, v);
  const auto r = tucker_ranks(t);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(r[j], 2u);
    EXPECT_EQ(tu::gauss_rank(unfold(t, j)), 2u);
  }
}

TEST(ModeSubspace, UnfoldingRankMatchesOnLowRankInstances) {
  const std::vector<std::pair<Dims, Dims>> cases = {
      {{6, 5, 4}, {2, 3, 2}}, {{8, 4, 3, 2}, {3, 2, 2, 1}}, {{5, 5}, {3, 3}}, {{4, 4, 4, 4}, {2, 1, 3, 2}}};
  std::uint64_t s = 0;
  for (const auto& [dims, ranks] : cases) {
    const auto t = random_tucker(dims, ranks, ++s);
    for (std::size_t j = 0; j < dims.size(); ++j) {
      const auto b = mode_subspace(t, j);
      EXPECT_EQ(b.rank(), ranks[j]);
      EXPECT_EQ(tu::gauss_rank(unfold(t, j)), ranks[j]);
      const Eigen::MatrixXd g = b.basis.transpose() * b.basis;
      EXPECT_LT((g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Coherence, Examples) {
  const auto e1 = basis_from_columns(0, basis_vector(4, 0));
  EXPECT_NEAR(coherence(e1), 4.0, 1e-12);
  EXPECT_NEAR(mode_infty_bound(basis_from_columns(0, basis_vector(3, 0))), 1.0, 1e-12);
  const auto full = basis_from_columns(0, Eigen::MatrixXd::Identity(3, 3));
  EXPECT_NEAR(coherence(full), 1.0, 1e-12);
  EXPECT_NEAR(mode_infty_bound(basis_from_columns(0, Eigen::MatrixXd::Identity(2, 2))), 1.0, 1e-12);
  Eigen::VectorXd flat(2);
  flat << 1, 1;
  const auto f = basis_from_columns(0, flat / std::sqrt(2.0));
  EXPECT_NEAR(coherence(f), 1.0, 1e-12);
  EXPECT_NEAR(mode_infty_bound(f), 0.70710678118654752, 1e-12);
}

TEST(Coherence, RangeAndRelationToInftyBound) {
  CounterRng rng(5);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 2 + rng.below(8);
    const std::size_t r = 1 + rng.below(d);
    const auto b = basis_from_columns(0, tu::random_orthonormal(d, r, rng));
    const double mu = coherence(b);
    EXPECT_GE(mu, 1.0 - 1e-12);
    EXPECT_LE(mu, static_cast<double>(d) / r + 1e-12);
    const double bound = mode_infty_bound(b);
    EXPECT_NEAR(bound * bound * d / r, mu, 1e-10 * mu);
  }
}

class ProjectorTest : public ::testing::Test {
 protected:
  ProjectorTest()
      : x(random_tucker({4, 5, 3}, {2, 2, 1}, 7)), stack(x), w(random_dense({4, 5, 3}, 8)),
        w2(random_dense({4, 5, 3}, 9)) {}
  DenseTensor x;
  ProjectorStack stack;
  DenseTensor w;
  DenseTensor w2;
};

TEST_F(ProjectorTest, ProjectorsAreIdempotent) {
  for (std::size_t j = 0; j < 3; ++j) {
    const auto& p = stack.projector(j);
    EXPECT_LT((p * p - p).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  }
  std::vector<Projection> all = {Projection::q0(), Projection::q(), Projection::qperp()};
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a + 1; b < 3; ++b) all.push_back(Projection::qperp_pair(a, b));
  for (const auto& pr : all) {
    const auto once = stack.project(w, pr);
    EXPECT_LT(max_abs(stack.project(once, pr) - once), 1e-10);
  }
}

TEST_F(ProjectorTest, Q0FixesReference) {
  EXPECT_LT(max_abs(stack.project(x, Projection::q0()) - x), 1e-12 * x.max_abs());
}

TEST_F(ProjectorTest, DirectSum) {
  const auto q = stack.project(w, Projection::q());
  const auto qp = stack.project(w, Projection::qperp());
  EXPECT_LT(max_abs(q + qp - w), 1e-12);
  DenseTensor sum = DenseTensor::zeros(w.dims());
  std::vector<DenseTensor> parts;
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a + 1; b < 3; ++b) {
      parts.push_back(stack.project(w, Projection::qperp_pair(a, b)));
      sum = sum + parts.back();
    }
  EXPECT_LT(max_abs(sum - qp), 1e-12);
  const double scale = hs_norm(w) * hs_norm(w2);
  EXPECT_LT(std::abs(inner(stack.project(w, Projection::q0()),
                           stack.project(w2, Projection::qperp()))), 1e-10 * scale);
  for (std::size_t i = 0; i < parts.size(); ++i)
    for (std::size_t j = i + 1; j < parts.size(); ++j)
      EXPECT_LT(std::abs(inner(parts[i], parts[j])), 1e-10 * scale);
  EXPECT_THROW(stack.project(w, Projection::qperp_pair(2, 1)), Error);
  EXPECT_THROW(stack.project(DenseTensor::zeros({4, 5, 2}), Projection::q()), Error);
}

TEST(TangentSpace, DimensionMatchesIndependentImages) {
  // Count numerically independent images of the standard basis under Q.
  const std::vector<std::pair<Dims, Dims>> cases = {
      {{4, 4, 4}, {2, 2, 2}}, {{5, 3, 4}, {1, 2, 2}}, {{3, 3, 3, 3}, {1, 2, 1, 2}}, {{6, 5, 4}, {2, 2, 3}}};
  std::uint64_t seed = 40;
  for (const auto& [dims, ranks] : cases) {
    const ProjectorStack st(random_tucker(dims, ranks, ++seed));
    const std::size_t n = product(dims);
    Eigen::MatrixXd images(n, n);
    for (std::size_t f = 0; f < n; ++f) {
      std::vector<double> e(n, 0.0);
      e[f] = 1.0;
      const auto img = st.project(DenseTensor(dims, e), Projection::q());
      images.col(static_cast<Eigen::Index>(f)) =
          Eigen::Map<const Eigen::VectorXd>(img.values().data(), static_cast<Eigen::Index>(n));
    }
    const std::size_t rank = tu::gauss_rank(images, 1e-8);
    EXPECT_EQ(rank, st.tangent_dimension());
    std::size_t bound = 0;
    for (std::size_t j = 0; j < dims.size(); ++j) {
      std::size_t t = dims[j];
      for (std::size_t l = 0; l < dims.size(); ++l)
        if (l != j) t *= ranks[l];
      bound += t;
    }
    EXPECT_LE(rank, bound);
    const Eigen::MatrixXd b = st.tangent_basis();
    EXPECT_EQ(static_cast<std::size_t>(b.cols()), rank);
    EXPECT_LT((b.transpose() * b - Eigen::MatrixXd::Identity(b.cols(), b.cols())).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(TangentSpace, LeverageMatchesExplicitProjection) {
  const Dims dims{4, 3, 5};
  const ProjectorStack st(random_tucker(dims, {2, 1, 2}, 3));
  for (std::size_t f = 0; f < product(dims); ++f) {
    std::vector<double> e(product(dims), 0.0);
    e[f] = 1.0;
    const auto img = st.project(DenseTensor(dims, e), Projection::q());
    const double h = hs_norm(img);
    EXPECT_NEAR(st.tangent_leverage(unflatten(dims, f)), h * h, 1e-12);
  }
}
