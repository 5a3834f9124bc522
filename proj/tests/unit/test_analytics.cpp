#include "easimix/analytics.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace easimix;

namespace {

Dimensions dims3(int degree = 1, int mp = 0, int m = 0, int my = 0) {
  Dimensions d;
  d.goods = 3;
  d.degree = degree;
  d.price_covariates = mp;
  d.demographics = m;
  d.utility_covariates = my;
  return d;
}

EvaluationPoint interior_point(const Dimensions& d, const FullCoefficients& full, StreamRng& rng) {
  EvaluationPoint at;
  at.log_prices = Vec(d.goods);
  for (int l = 0; l < d.goods; ++l) at.log_prices(l) = 0.3 * rng.normal();
  at.log_expenditure = 0.5 * rng.normal();
  auto v = [&](int n) {
    Vec x(n);
    for (int k = 0; k < n; ++k) x(k) = rng.normal();
    return x;
  };
  at.h = v(d.demographics);
  at.h_p = v(d.price_covariates);
  at.h_y = v(d.utility_covariates);
  oracle::solve_demand(full, at.log_prices, at.log_expenditure, at.h, at.h_p, at.h_y, &at.shares);
  return at;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-3, std::abs(b)); }

}  // namespace

TEST(Elasticities, ZeroPriceAndUtilityTermsGiveZeroSemiElasticities) {
  Dimensions d = dims3();
  EasiCoefficients c = EasiCoefficients::zero(d);
  c.b[0] << 0.5, 0.3;
  const FullCoefficients f = complete_system(c, d);
  EvaluationPoint at{(Vec(3) << 0.5, 0.3, 0.2).finished(), (Vec(3) << 0.1, -0.2, 0.3).finished(), 1.0, Vec(), Vec(), Vec()};
  const SemiElasticities se = semi_elasticities(f, at, 0.4);
  EXPECT_TRUE((se.gamma.array() == 0.0).all());
  EXPECT_TRUE((se.dy.array() == 0.0).all());
  EXPECT_TRUE((se.de.array() == 0.0).all());
}

TEST(Elasticities, ZeroPricesMakeDeEqualDy) {
  Dimensions d = dims3();
  StreamRng rng(1);
  EasiCoefficients c = oracle::random_coefficients(d, rng);
  c.B.setZero();
  const FullCoefficients f = complete_system(c, d);
  EvaluationPoint at{(Vec(3) << 0.5, 0.3, 0.2).finished(), Vec::Zero(3), 1.0, Vec(), Vec(), Vec()};
  const SemiElasticities se = semi_elasticities(f, at, 1.0);
  EXPECT_LT((se.de - se.dy).norm(), 1e-15);
}

TEST(Elasticities, UnitElasticCollapse) {
  Mat G = Mat::Zero(3, 3);
  const PriceElasticities e = price_elasticities(G, Vec::Zero(3), (Vec(3) << 0.5, 0.3, 0.2).finished());
  EXPECT_EQ(e.marshallian, -Mat::Identity(3, 3));
  EXPECT_NEAR(e.hicksian(0, 0), -0.5, 1e-15);
  EXPECT_NEAR(e.hicksian(1, 1), -0.7, 1e-15);
  EXPECT_NEAR(e.hicksian(2, 2), -0.8, 1e-15);
}

TEST(Elasticities, IncomeElasticityCollapses) {
  const Vec w = (Vec(3) << 0.5, 0.3, 0.2).finished();
  EXPECT_EQ(income_elasticities(Vec::Zero(3), w), Vec::Ones(3));
  const Vec eta = income_elasticities(w, w);
  for (int l = 0; l < 3; ++l) EXPECT_DOUBLE_EQ(eta(l), 2.0);
}

TEST(Elasticities, ExactMarshallianCollapseAtAnyPoint) {
  Dimensions d = dims3(1, 0, 1, 0);
  EasiCoefficients c = EasiCoefficients::zero(d);
  c.b[0] << 0.5, 0.3;
  c.C << 0.02, -0.01;
  const FullCoefficients f = complete_system(c, d);
  StreamRng rng(2);
  for (int t = 0; t < 20; ++t) {
    const EvaluationPoint at = interior_point(d, f, rng);
    const ElasticitySet e = elasticities(f, at);
    EXPECT_LT((e.marshallian + Mat::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Elasticities, MatchFiniteDifferences) {
  int checked = 0;
  for (std::uint64_t seed = 1; checked < 50; ++seed) {
    Dimensions d = dims3(2, 1, 1, 1);
    StreamRng rng(seed);
    const FullCoefficients f = complete_system(oracle::random_coefficients(d, rng, 0.03), d);
    EvaluationPoint at = interior_point(d, f, rng);
    if ((at.shares.array() < 0.05).any()) continue;
    ++checked;
    const ElasticitySet e = elasticities(f, at);
    const auto fd = oracle::fd_elasticities(f, at.log_prices, at.log_expenditure, at.h, at.h_p, at.h_y);
    for (int l = 0; l < 3; ++l) {
      EXPECT_LT(rel_err(e.income(l), fd.income(l)), 1e-4);
      EXPECT_LT(rel_err(e.de_semi(l), fd.de(l)), 1e-4);
      for (int j = 0; j < 3; ++j) {
        EXPECT_LT(rel_err(e.marshallian(l, j), fd.marshallian(l, j)), 1e-4) << "seed " << seed;
        EXPECT_LT(rel_err(e.hicksian(l, j), fd.hicksian(l, j)), 1e-4) << "seed " << seed;
      }
    }
  }
}

TEST(Elasticities, HomogeneityAndAddingUp) {
  Dimensions d = dims3(2, 1);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    StreamRng rng(seed);
    const FullCoefficients f = complete_system(oracle::random_coefficients(d, rng, 0.03), d);
    const EvaluationPoint at = interior_point(d, f, rng);
    const ElasticitySet e = elasticities(f, at);
    EXPECT_LT(e.gamma_semi.rowwise().sum().norm(), 1e-14);
    EXPECT_NEAR(at.shares.dot(e.income), 1.0, 1e-12);
  }
}

TEST(Elasticities, ZeroShareIsUndefined) {
  Dimensions d = dims3();
  const FullCoefficients f = complete_system(EasiCoefficients::zero(d), d);
  EvaluationPoint at{(Vec(3) << 0.5, 0.5, 0.0).finished(), Vec::Zero(3), 0.0, Vec(), Vec(), Vec()};
  EXPECT_THROW(elasticities(f, at), DataError);
}

TEST(EngelCurve, FlatWithoutUtilityTerms) {
  Dimensions d = dims3();
  EasiCoefficients c = EasiCoefficients::zero(d);
  c.b[0] << 0.8, 0.15;
  const FullCoefficients f = complete_system(c, d);
  const Vec grid = Vec::LinSpaced(7, -2.0, 2.0);
  const Mat curve = engel_curve(f, Vec(), Vec(), grid);
  for (int g = 0; g < 7; ++g) {
    EXPECT_NEAR(curve(g, 0), 0.8, 1e-15);
    EXPECT_NEAR(curve(g, 1), 0.15, 1e-15);
    EXPECT_NEAR(curve(g, 2), 0.05, 1e-15);
  }
}

TEST(EngelCurve, SumsToOne) {
  Dimensions d = dims3(3, 0, 1, 1);
  StreamRng rng(5);
  const FullCoefficients f = complete_system(oracle::random_coefficients(d, rng), d);
  const Mat curve = engel_curve(f, Vec::Ones(1), Vec::Ones(1), Vec::LinSpaced(11, -3.0, 3.0));
  for (int g = 0; g < 11; ++g) EXPECT_NEAR(curve.row(g).sum(), 1.0, 1e-13);
}

TEST(Analytics, RepresentativePoint) {
  Dataset data;
  data.dims.goods = 2;
  data.dims.demographics = 1;
  const Vec h0 = Vec::Zero(1), h1 = Vec::Ones(1);
  data.observations.push_back(
      make_observation((Vec(2) << 0.6, 0.4).finished(), (Vec(2) << 0.0, std::log(2.0)).finished(), std::log(10.0), h1));
  data.observations.push_back(
      make_observation((Vec(2) << 0.2, 0.8).finished(), (Vec(2) << 0.0, std::log(4.0)).finished(), std::log(30.0), h1, Vec(), Vec(), Vec(), 1.0));
  data.observations.push_back(
      make_observation((Vec(2) << 0.4, 0.6).finished(), (Vec(2) << 0.0, 0.0).finished(), std::log(20.0), h0, Vec(), Vec(), Vec(), 1.5));
  const EvaluationPoint at = representative_point(data);
  EXPECT_NEAR(at.shares(0), (0.6 + 0.2 + 1.5 * 0.4) / 3.5, 1e-15);
  EXPECT_NEAR(std::exp(at.log_prices(1)), (2.0 + 4.0 + 1.5) / 3.5, 1e-14);
  EXPECT_NEAR(std::exp(at.log_expenditure), (10.0 + 30.0 + 30.0) / 3.5, 1e-12);
  EXPECT_EQ(at.h(0), 1.0);  // integer-valued column at its weighted mode
}
