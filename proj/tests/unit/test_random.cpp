#include "easimix/random.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace easimix;

TEST(Random, StreamsAreReproducibleAndDistinct) {
  StreamRng a(1, 2, 3, 4), b(1, 2, 3, 4), c(1, 2, 3, 5);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
  }
}

TEST(Random, NormalMoments) {
  StreamRng rng(11);
  const int n = 200000;
  double m = 0.0, v = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    m += x;
    v += x * x;
  }
  m /= n;
  v = v / n - m * m;
  EXPECT_NEAR(m, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(v, 1.0, 0.02);
}

TEST(Random, InverseWishartMean) {
  StreamRng rng(5);
  Mat scale(2, 2);
  scale << 2.0, 0.5, 0.5, 1.0;
  const double dof = 10.0;
  Mat mean = Mat::Zero(2, 2);
  const int n = 20000;
  for (int i = 0; i < n; ++i) mean += sample::inverse_wishart(dof, scale, rng);
  mean /= n;
  const Mat expected = scale / (dof - 2.0 - 1.0);
  EXPECT_LT((mean - expected).norm() / expected.norm(), 0.03);
}

TEST(Random, DirichletOnSimplex) {
  StreamRng rng(8);
  Vec alpha(3);
  alpha << 0.5, 1.0, 2.0;
  Vec mean = Vec::Zero(3);
  for (int i = 0; i < 20000; ++i) {
    const Vec d = sample::dirichlet(alpha, rng);
    EXPECT_NEAR(d.sum(), 1.0, 1e-12);
    EXPECT_TRUE((d.array() >= 0.0).all());
    mean += d;
  }
  mean /= 20000.0;
  EXPECT_LT((mean - alpha / alpha.sum()).norm(), 0.01);
}

TEST(Random, CategoricalFrequencies) {
  StreamRng rng(2);
  Vec lw(3);
  lw << std::log(0.2), std::log(0.3), std::log(0.5);
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < 30000; ++i) ++counts[sample::categorical_log(lw, rng)];
  EXPECT_NEAR(counts[0] / 30000.0, 0.2, 0.01);
  EXPECT_NEAR(counts[2] / 30000.0, 0.5, 0.01);
}
