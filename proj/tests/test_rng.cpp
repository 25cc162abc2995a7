#include "graphuq/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "testutil.hpp"

namespace {

TEST(Rng, SameSeedSameStream) {
  graphuq::Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  graphuq::Rng c(42), d(42);
  for (int i = 0; i < 200; ++i) {
    ASSERT_DOUBLE_EQ(c.uniform(), d.uniform());
    ASSERT_DOUBLE_EQ(c.normal(), d.normal());
    ASSERT_DOUBLE_EQ(c.gamma(0.7), d.gamma(0.7));
    ASSERT_DOUBLE_EQ(c.gamma(3.2), d.gamma(3.2));
  }
}

TEST(Rng, DifferentSeedsDiverge) {
  graphuq::Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += (a.next_u64() == b.next_u64());
  EXPECT_EQ(same, 0);
}

TEST(Rng, UniformRangeAndMoments) {
  graphuq::Rng rng(7);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  const double mean = sum / n;
  // SE of the mean of U[0,1) is (1/sqrt(12))/sqrt(n).
  EXPECT_NEAR(mean, 0.5, 4.0 / std::sqrt(12.0 * n));
}

TEST(Rng, NormalMoments) {
  graphuq::Rng rng(11);
  const int n = 200000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = rng.normal();
  const auto ms = testutil::mean_std(xs);
  EXPECT_NEAR(ms.mean, 0.0, 4.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(ms.std, 1.0, 0.01);
}

TEST(Rng, GammaMomentsLargeShape) {
  graphuq::Rng rng(13);
  const double shape = 4.5;
  const int n = 200000;
  std::vector<double> xs(n);
  for (auto& x : xs) {
    x = rng.gamma(shape);
    ASSERT_GT(x, 0.0);
  }
  const auto ms = testutil::mean_std(xs);
  // Gamma(k, 1): mean k, variance k.
  EXPECT_NEAR(ms.mean, shape, 4.0 * std::sqrt(shape / n));
  EXPECT_NEAR(ms.std * ms.std, shape, 0.1);
}

TEST(Rng, GammaMomentsSmallShapeBoostPath) {
  graphuq::Rng rng(17);
  const double shape = 0.4;
  const int n = 200000;
  std::vector<double> xs(n);
  for (auto& x : xs) {
    x = rng.gamma(shape);
    ASSERT_GT(x, 0.0);
  }
  const auto ms = testutil::mean_std(xs);
  EXPECT_NEAR(ms.mean, shape, 4.0 * std::sqrt(shape / n));
  EXPECT_NEAR(ms.std * ms.std, shape, 0.05);
}

TEST(Rng, GammaRejectsNonPositiveShape) {
  graphuq::Rng rng(1);
  EXPECT_THROW(rng.gamma(0.0), std::invalid_argument);
  EXPECT_THROW(rng.gamma(-1.0), std::invalid_argument);
}

TEST(Rng, BoundedIntegers) {
  graphuq::Rng rng(23);
  std::vector<int> counts(10, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto v = rng.below(10);
    ASSERT_LT(v, 10u);
    counts[static_cast<std::size_t>(v)]++;
  }
  for (int c : counts) EXPECT_NEAR(c, n / 10, 5.0 * std::sqrt(n * 0.1 * 0.9));
  EXPECT_THROW(rng.below(0), std::invalid_argument);
}

TEST(Rng, BernoulliEdgesAndRate) {
  graphuq::Rng rng(29);
  for (int i = 0; i < 100; ++i) {
    EXPECT_FALSE(rng.bernoulli(0.0));
    EXPECT_TRUE(rng.bernoulli(1.0));
  }
  int hits = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.3);
  EXPECT_NEAR(hits, 0.3 * n, 5.0 * std::sqrt(n * 0.3 * 0.7));
  EXPECT_THROW(rng.bernoulli(1.5), std::invalid_argument);
}

TEST(Rng, ShuffleIsPermutationAndDeterministic) {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  std::vector<int> w = v;
  graphuq::Rng a(31), b(31);
  a.shuffle(v);
  b.shuffle(w);
  EXPECT_EQ(v, w);
  std::sort(w.begin(), w.end());
  std::vector<int> sorted(50);
  std::iota(sorted.begin(), sorted.end(), 0);
  EXPECT_EQ(w, sorted);
}

TEST(Rng, MixSeedSeparatesStreams) {
  EXPECT_EQ(graphuq::mix_seed(5, 1), graphuq::mix_seed(5, 1));
  EXPECT_NE(graphuq::mix_seed(5, 1), graphuq::mix_seed(5, 2));
  EXPECT_NE(graphuq::mix_seed(5, 1), graphuq::mix_seed(6, 1));
}

}  // namespace
