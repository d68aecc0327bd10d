#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "itc/rng.hpp"
#include "itc/sampling.hpp"
#include "test_util.hpp"

using namespace itc;

TEST(SampleOmega, ExhaustiveWithoutReplacement) {
  const Dims dims{3, 2, 4};
  SampleSet s = sample_omega(dims, 24, Replacement::without, 9);
  std::set<std::size_t> seen(s.flat().begin(), s.flat().end());
  EXPECT_EQ(seen.size(), 24u);
  EXPECT_EQ(*seen.rbegin(), 23u);
}

TEST(SampleOmega, RangeErrors) {
  const Dims dims{2, 2};
  EXPECT_THROW(sample_omega(dims, 5, Replacement::without, 1), Error);
  EXPECT_THROW(sample_omega(dims, 0, Replacement::with, 1), Error);
  EXPECT_NO_THROW(sample_omega(dims, 50, Replacement::with, 1));
}

TEST(SampleOmega, Deterministic) {
  const Dims dims{5, 5, 5};
  auto a = sample_omega(dims, 40, Replacement::without, 77);
  auto b = sample_omega(dims, 40, Replacement::without, 77);
  auto c = sample_omega(dims, 40, Replacement::without, 78);
  EXPECT_EQ(a.flat(), b.flat());
  EXPECT_NE(a.flat(), c.flat());
}

// each cell's frequency over many seeds within 5 sigma of uniform
TEST(SampleOmega, SingleDrawUniform) {
  const Dims dims{2, 3, 2};
  const std::size_t cells = 12, seeds = 100000;
  for (Replacement r : {Replacement::with, Replacement::without}) {
    std::vector<double> hits(cells, 0.0);
    for (std::size_t s = 0; s < seeds; ++s) hits[sample_omega(dims, 1, r, s).flat()[0]] += 1;
    const double p = 1.0 / cells;
    const double sigma = std::sqrt(seeds * p * (1 - p));
    double chi2 = 0.0;
    for (double h : hits) {
      EXPECT_LE(std::abs(h - seeds * p), 5 * sigma);
      chi2 += (h - seeds * p) * (h - seeds * p) / (seeds * p);
    }
    // 11 dof; 99.9% quantile is 31.3
    EXPECT_LT(chi2, 31.3);
  }
}

// later positions of a without-replacement draw are uniform too
TEST(SampleOmega, PartialShuffleUniform) {
  const Dims dims{3, 3};
  const std::size_t seeds = 45000;
  std::vector<double> hits(9, 0.0);
  for (std::size_t s = 0; s < seeds; ++s) hits[sample_omega(dims, 6, Replacement::without, s).flat()[5]] += 1;
  const double p = 1.0 / 9, sigma = std::sqrt(seeds * p * (1 - p));
  for (double h : hits) EXPECT_LE(std::abs(h - seeds * p), 5 * sigma);
}

TEST(SampleSet, DistinctFirstOccurrence) {
  SampleSet s({2, 2}, {3, 1, 3, 0, 1}, Replacement::with);
  EXPECT_EQ(s.distinct(), (std::vector<std::size_t>{3, 1, 0}));
  SampleSet d = distinct_support(s);
  EXPECT_EQ(d.replacement(), Replacement::without);
  EXPECT_EQ(d.flat(), (std::vector<std::size_t>{3, 1, 0}));
  EXPECT_THROW(SampleSet({2, 2}, {1, 1}, Replacement::without), Error);
  EXPECT_THROW(SampleSet({2, 2}, {4}, Replacement::with), Error);
}

TEST(SampleSet, BatchesTile) {
  SampleSet s = sample_batches({4, 4, 4}, 7, 5, 3);
  ASSERT_TRUE(s.batch_bounds().has_value());
  EXPECT_EQ(s.size(), 35u);
  std::vector<std::size_t> joined;
  for (std::size_t b = 0; b < 5; ++b) {
    const auto part = s.batch(b).flat();
    EXPECT_EQ(part.size(), 7u);
    joined.insert(joined.end(), part.begin(), part.end());
  }
  EXPECT_EQ(joined, s.flat());
  EXPECT_THROW(SampleSet({2, 2}, {0, 1, 2}, Replacement::with,
                         SampleSet::Bounds{{0, 2}, {2, 3}}),
               Error);
  EXPECT_THROW(SampleSet({2, 2}, {0, 1, 2}, Replacement::with, SampleSet::Bounds{{0, 2}}), Error);
}

TEST(ProjectOmega, Examples) {
  const Dims dims{3, 4, 2};
  DenseTensor x = tu::random_dense(dims, 4);
  SampleSet all = sample_omega(dims, 24, Replacement::without, 1);
  DenseTensor px = project_omega(x, all);
  EXPECT_EQ(std::vector<double>(px.values().begin(), px.values().end()),
            std::vector<double>(x.values().begin(), x.values().end()));

  SampleSet one({3, 4, 2}, {5}, Replacement::without);
  EXPECT_TRUE(project_omega(DenseTensor::zeros(dims), one).is_zero());
  EXPECT_THROW(project_omega(DenseTensor::zeros({3, 4}), one), Error);
}

TEST(ProjectOmega, IdempotentAndContractive) {
  const Dims dims{4, 3, 5};
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    DenseTensor x = tu::random_dense(dims, seed);
    SampleSet s = sample_omega(dims, 1 + seed * 2, Replacement::with, seed);
    DenseTensor once = project_omega(x, s);
    DenseTensor twice = project_omega(once, s);
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_EQ(once.flat(i), twice.flat(i));
      const bool kept = std::find(s.flat().begin(), s.flat().end(), i) != s.flat().end();
      EXPECT_EQ(once.flat(i), kept ? x.flat(i) : 0.0);
    }
    EXPECT_LE(hs_norm(once), hs_norm(x));
  }
}

TEST(SampledMean, Examples) {
  const Dims dims{2, 3, 2};
  DenseTensor a = tu::random_dense(dims, 8);
  SampleSet s(dims, {0}, Replacement::with);
  DenseTensor m = sampled_mean(a, s);
  EXPECT_DOUBLE_EQ(m.flat(0), 12.0 * a.flat(0));
  for (std::size_t i = 1; i < m.size(); ++i) EXPECT_EQ(m.flat(i), 0.0);

  SampleSet big = sample_omega(dims, 30, Replacement::with, 2);
  EXPECT_TRUE(sampled_mean(DenseTensor::zeros(dims), big).is_zero());
  EXPECT_THROW(sampled_mean(a, SampleSet(dims, {0}, Replacement::without)), Error);
  EXPECT_THROW(sampled_mean(DenseTensor::zeros({2, 3}), s), Error);
}

TEST(SampledMean, DuplicatesCount) {
  const Dims dims{2, 2};
  DenseTensor a({2, 2}, {1, 2, 3, 4});
  DenseTensor m = sampled_mean(a, SampleSet(dims, {1, 1, 3}, Replacement::with));
  EXPECT_DOUBLE_EQ(m.flat(1), 4.0 * 2 / 3 * 2);
  EXPECT_DOUBLE_EQ(m.flat(3), 4.0 / 3 * 4);
}

namespace {

// running mean of sampled_mean over seeds [0, seeds), entrywise
std::vector<double> mc_mean(const DenseTensor& a, std::size_t n, std::size_t seeds,
                            std::uint64_t base, std::vector<double>* var = nullptr) {
  std::vector<double> sum(a.size(), 0.0), sq(a.size(), 0.0);
  for (std::size_t s = 0; s < seeds; ++s) {
    DenseTensor m = sampled_mean(a, sample_omega(a.dims(), n, Replacement::with, derive_seed(base, s)));
    for (std::size_t i = 0; i < a.size(); ++i) {
      sum[i] += m.flat(i);
      sq[i] += m.flat(i) * m.flat(i);
    }
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum[i] /= seeds;
    if (var) (*var)[i] = sq[i] / seeds - sum[i] * sum[i];
  }
  return sum;
}

}  // namespace

// Monte Carlo oracle: each cell's mean within 3 standard errors of A
TEST(SampledMean, Unbiased) {
  const Dims dims{2, 2, 2};
  DenseTensor a = tu::random_dense(dims, 21);
  const std::size_t seeds = 10000;
  std::vector<double> var(a.size());
  auto mean = mc_mean(a, 5, seeds, 1234, &var);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double se = std::sqrt(var[i] / seeds);
    worst = std::max(worst, std::abs(mean[i] - a.flat(i)) / se);
  }
  EXPECT_LE(worst, 3.0);
}

// max-norm error of the seed average decays like seeds^{-1/2}
TEST(SampledMean, ConvergenceRate) {
  const Dims dims{2, 2, 2};
  DenseTensor a = tu::random_dense(dims, 22);
  const std::vector<std::size_t> counts{100, 400, 1600, 6400};
  const int reps = 24;
  std::vector<double> lx, ly;
  for (std::size_t c : counts) {
    double err = 0.0;
    for (int r = 0; r < reps; ++r) {
      auto mean = mc_mean(a, 5, c, derive_seed(99, c, r));
      double e = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(mean[i] - a.flat(i)));
      err += e / reps;
    }
    lx.push_back(std::log(double(c)));
    ly.push_back(std::log(err));
  }
  const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4, my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, -0.5, 0.15);
}

TEST(Omega1, RoundTrip) {
  SampleSet s = sample_omega({3, 4, 5}, 17, Replacement::with, 5);
  std::stringstream ss;
  write_omega1(ss, s);
  SampleSet t = read_omega1(ss);
  EXPECT_EQ(t.flat(), s.flat());
  EXPECT_EQ(t.dims(), s.dims());
  EXPECT_EQ(t.replacement(), Replacement::with);

  std::stringstream bad("OMEGA1 2 1 without\n2 2\n0 2\n");
  EXPECT_THROW(read_omega1(bad), Error);
  std::stringstream dup("OMEGA1 2 2 without\n2 2\n0 1\n0 1\n");
  EXPECT_THROW(read_omega1(dup), Error);
  std::stringstream shortlist("OMEGA1 2 2 with\n2 2\n0 1\n");
  EXPECT_THROW(read_omega1(shortlist), Error);
}
