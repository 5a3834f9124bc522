#include "easimix/random.hpp"
#include "easimix/summary.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace easimix;

TEST(Hpd, SymmetricSampleNearEqualTailed) {
  StreamRng rng(1);
  std::vector<double> x(20000);
  for (auto& v : x) v = rng.normal();
  const auto [lo, hi] = hpd_interval(x, 0.95);
  EXPECT_NEAR(lo, -1.96, 0.06);
  EXPECT_NEAR(hi, 1.96, 0.06);
}

TEST(Hpd, ConstantSampleHasZeroWidth) {
  const std::vector<double> x(100, 3.25);
  const auto [lo, hi] = hpd_interval(x, 0.95);
  EXPECT_EQ(lo, 3.25);
  EXPECT_EQ(hi, 3.25);
}

TEST(Hpd, ExponentialMatchesAllWindowsScan) {
  StreamRng rng(2);
  std::vector<double> x(100000);
  for (auto& v : x) v = -std::log(rng.uniform());
  const auto got = hpd_interval(x, 0.95);
  const auto want = oracle::all_windows_hpd(x, 0.95);
  EXPECT_EQ(got, want);
  EXPECT_LT(got.first, 0.001);
  EXPECT_NEAR(got.second, 3.0, 0.1);
}

TEST(Hpd, NeverLongerThanEqualTailed) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    StreamRng rng(seed);
    std::vector<double> x(500);
    for (auto& v : x) v = seed % 2 ? std::exp(rng.normal()) : rng.normal() + (rng.uniform() < 0.3 ? 4.0 : 0.0);
    const auto [lo, hi] = hpd_interval(x, 0.9);
    std::vector<double> s = x;
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    const std::size_t k = static_cast<std::size_t>(std::ceil(0.9 * n));
    const std::size_t a = (n - k) / 2;
    EXPECT_LE(hi - lo, s[a + k - 1] - s[a] + 1e-15);
  }
}

TEST(Hpd, SummaryAndValidation) {
  std::vector<double> x;
  for (int i = 1; i <= 11; ++i) x.push_back(i);
  EXPECT_EQ(median(x), 6.0);
  const PosteriorSummary s = summarize(x, 0.95);
  EXPECT_EQ(s.point, 6.0);
  EXPECT_EQ(s.draw_count, 11u);
  EXPECT_LE(s.hpd_low, s.point);
  EXPECT_GE(s.hpd_high, s.point);
  EXPECT_THROW(hpd_interval(std::vector<double>(5, 1.0)), Error);
  EXPECT_THROW(hpd_interval(x, 1.5), Error);
}
