#include "easimix/truncated_normal.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace easimix;

TEST(TruncatedNormal, HalfNormalMean) {
  StreamRng rng(1);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_truncated_normal_upper(0.0, 1.0, 0.0, rng);
    ASSERT_LE(x, 0.0);
    sum += x;
  }
  EXPECT_NEAR(sum / n, -std::sqrt(2.0 / std::numbers::pi), 0.01);
}

TEST(TruncatedNormal, InactiveTruncation) {
  StreamRng rng(2);
  const int n = 20000;
  double m = 0.0, v = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_truncated_normal_upper(-100.0, 1.0, 0.0, rng);
    m += x;
    v += x * x;
  }
  m /= n;
  v = v / n - m * m;
  EXPECT_NEAR(m, -100.0, 0.05);
  EXPECT_NEAR(v, 1.0, 0.05);
}

TEST(TruncatedNormal, FarTailStaysFeasible) {
  StreamRng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = sample_truncated_normal_upper(40.0, 1.0, 0.0, rng);
    EXPECT_LE(x, 0.0);
    EXPECT_GT(x, -1.0);
  }
}

TEST(TruncatedNormal, CorrelatedOrthantMatchesRejection) {
  Vec mean(2);
  mean << 0.5, 0.5;
  Mat cov(2, 2);
  cov << 1.0, 0.6, 0.6, 1.0;
  const int n = 40000;
  StreamRng rng(4), ref_rng(5);
  const std::vector<Vec> ref = oracle::rejection_orthant(mean, cov, n, ref_rng);
  Vec m1 = Vec::Zero(2), m2 = Vec::Zero(2), r1 = Vec::Zero(2), r2 = Vec::Zero(2);
  Vec r4 = Vec::Zero(2);
  for (int i = 0; i < n; ++i) {
    StreamRng draw_rng(6, 0, 0, static_cast<std::uint64_t>(i));
    const Vec x = sample_truncated_mvn(mean, cov, draw_rng);
    ASSERT_TRUE((x.array() <= 0.0).all());
    m1 += x;
    m2 += x.cwiseAbs2();
    r1 += ref[i];
    r2 += ref[i].cwiseAbs2();
    r4 += ref[i].array().pow(4).matrix();
  }
  m1 /= n, m2 /= n, r1 /= n, r2 /= n, r4 /= n;
  for (int k = 0; k < 2; ++k) {
    const double se1 = std::sqrt((r2(k) - r1(k) * r1(k)) / n) * std::sqrt(2.0);
    const double se2 = std::sqrt((r4(k) - r2(k) * r2(k)) / n) * std::sqrt(2.0);
    EXPECT_NEAR(m1(k), r1(k), 3.0 * se1);
    EXPECT_NEAR(m2(k), r2(k), 3.0 * se2);
  }
}

TEST(TruncatedNormal, EmptyBlock) {
  StreamRng rng(7);
  EXPECT_EQ(sample_truncated_mvn(Vec(), Mat(), rng).size(), 0);
}
