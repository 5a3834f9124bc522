#include "easimix/synthgen.hpp"
#include "easimix/gram.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace easimix;

namespace {

// Constant predicted shares: no prices, no Engel slope.
GroundTruth constant_truth(double b1, double b2, double sd, double rho) {
  GroundTruth t;
  t.dims.goods = 3;
  t.dims.instruments = 1;
  t.dims.clusters = 1;
  t.goods = {"a", "b", "c"};
  t.coeffs.push_back(EasiCoefficients::zero(t.dims));
  t.coeffs[0].b[0] << b1, b2;
  t.gamma = Vec::Zero(t.dims.gamma_dim());
  Mat sigma = Mat::Identity(t.dims.error_dim(), t.dims.error_dim()) * 0.01;
  sigma(0, 0) = sigma(1, 1) = sd * sd;
  sigma(0, 1) = sigma(1, 0) = rho * sd * sd;
  t.sigma.push_back(sigma);
  t.phi = Vec::Ones(1);
  t.seed = 21;
  return t;
}

}  // namespace

TEST(Synthgen, CensoringMatchesOrthantProbability) {
  const double sd = 0.2, rho = -0.3;
  const GroundTruth t = constant_truth(0.15, 0.3, sd, rho);
  const int n = 20000;
  const SyntheticSample s = generate_population(t, n);

  StreamRng rng(99);
  int hits = 0;
  const int draws = 200000;
  const double c = std::sqrt(1 - rho * rho);
  for (int k = 0; k < draws; ++k) {
    const double z1 = rng.normal(), z2 = rng.normal();
    const double e1 = sd * z1, e2 = sd * (rho * z1 + c * z2);
    hits += (0.15 + e1 <= 0) || (0.3 + e2 <= 0) || (0.55 - e1 - e2 <= 0);
  }
  const double p = static_cast<double>(hits) / draws;
  const double se = std::sqrt(p * (1 - p) / n);
  EXPECT_GT(p, 0.2);
  EXPECT_NEAR(s.censoring_rate, p, 4 * se);
}

TEST(Synthgen, CensorIndicatorFollowsLatentSign) {
  const SyntheticSample s = generate_population(reference_truth(ReferenceDesign::TwoCluster, 5), 400);
  int censored = 0;
  for (int i = 0; i < 400; ++i) {
    const Vec& w = s.data.observations[i].shares;
    const Vec& latent = s.latent[i];
    EXPECT_NEAR(w.sum(), 1.0, 1e-12);
    bool any = false;
    for (int l = 0; l < 3; ++l) {
      EXPECT_EQ(w(l) == 0.0, latent(l) <= 0.0);
      any = any || w(l) == 0.0;
    }
    censored += any;
  }
  EXPECT_DOUBLE_EQ(s.censoring_rate, censored / 400.0);
  EXPECT_GT(s.censoring_rate, 0.05);
  EXPECT_LT(s.censoring_rate, 0.5);
}

TEST(Synthgen, UtilityIsAFixedPoint) {
  const GroundTruth t = reference_truth(ReferenceDesign::TwoCluster, 5);
  const SyntheticSample s = generate_population(t, 100);
  for (int i = 0; i < 100; ++i) {
    const FullCoefficients full = complete_system(t.coeffs[s.labels[i]], t.dims);
    EXPECT_NEAR(implicit_utility(s.data.observations[i], full), s.y(i), 1e-9);
  }
}

TEST(Synthgen, EmptyAndDeterministic) {
  const GroundTruth t = reference_truth(ReferenceDesign::TwoCluster, 5);
  const SyntheticSample empty = generate_population(t, 0);
  EXPECT_EQ(empty.data.size(), 0);
  EXPECT_EQ(empty.censoring_rate, 0.0);
  EXPECT_EQ(empty.data.goods.size(), 3u);

  const SyntheticSample a = generate_population(t, 50);
  const SyntheticSample b = generate_population(t, 80);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(a.data.observations[i].shares, b.data.observations[i].shares);
    EXPECT_EQ(a.data.observations[i].log_prices, b.data.observations[i].log_prices);
    EXPECT_EQ(a.labels[i], b.labels[i]);
  }
  GroundTruth other = t;
  other.seed = 6;
  EXPECT_NE(generate_population(other, 5).data.observations[0].shares, a.data.observations[0].shares);
}

TEST(Synthgen, FirstStageRegressionRecoversGamma) {
  GroundTruth t = reference_truth(ReferenceDesign::TwoCluster, 7);
  const int n = 6000;
  const SyntheticSample s = generate_population(t, n);
  const Dimensions& d = t.dims;
  const int s_mod = d.modeled();
  const Mat check = KroneckerLayout::for_gamma(d).to_check(t.gamma);
  // The reference design has no exogenous terms in the first stage, so an
  // instrument-only regression is unbiased.
  EXPECT_EQ(check.topRows(d.exogenous()).cwiseAbs().maxCoeff(), 0.0);
  Mat g(n, 1 + d.instruments);
  Mat p(n, s_mod);
  for (int i = 0; i < n; ++i) {
    const Observation& o = s.data.observations[i];
    g(i, 0) = 1.0;
    g.row(i).tail(d.instruments) = o.z.transpose();
    p.row(i) = o.rel_log_prices.transpose();
  }
  const Mat coef = (g.transpose() * g).ldlt().solve(g.transpose() * p);
  const double se = std::sqrt(0.075 / n);
  for (int k = 0; k < s_mod; ++k) {
    EXPECT_NEAR(coef(0, k), 0.0, 5 * se);
    for (int r = 0; r < d.instruments; ++r) EXPECT_NEAR(coef(1 + r, k), check(d.exogenous() + r, k), 5 * se);
  }
}

TEST(Synthgen, SingleClusterLabelsAndPhi) {
  const SyntheticSample s = generate_population(reference_truth(ReferenceDesign::Symmetric, 2), 60);
  for (int l : s.labels) EXPECT_EQ(l, 0);
  const SyntheticSample two = generate_population(reference_truth(ReferenceDesign::TwoCluster, 2), 4000);
  const double frac = std::count(two.labels.begin(), two.labels.end(), 0) / 4000.0;
  EXPECT_NEAR(frac, 0.6, 4 * std::sqrt(0.24 / 4000));
}

TEST(Synthgen, ValidationRejectsMismatches) {
  GroundTruth t = reference_truth(ReferenceDesign::TwoCluster, 1);
  t.phi = Vec::Ones(1);
  EXPECT_THROW(t.validate(), Error);
  t = reference_truth(ReferenceDesign::TwoCluster, 1);
  t.coeffs.pop_back();
  EXPECT_THROW(t.validate(), DimensionError);
  t = reference_truth(ReferenceDesign::TwoCluster, 1);
  t.sigma[1](t.dims.error_dim() - 1, t.dims.error_dim() - 1) += 0.1;
  EXPECT_THROW(t.validate(), DataError);
  t = reference_truth(ReferenceDesign::Symmetric, 1);
  t.coeffs[0].A[0](0, 1) += 0.01;
  EXPECT_THROW(t.validate(), Error);
}

TEST(Synthgen, TruthJsonRoundTrip) {
  const GroundTruth t = reference_truth(ReferenceDesign::Asymmetric, 3);
  const GroundTruth back = truth_from_json(truth_to_json(t));
  EXPECT_EQ(back.dims, t.dims);
  EXPECT_EQ(back.gamma, t.gamma);
  EXPECT_EQ(back.sigma, t.sigma);
  EXPECT_EQ(back.phi, t.phi);
  EXPECT_EQ(back.seed, t.seed);
  EXPECT_EQ(pack(back.coeffs[0], back.dims), pack(t.coeffs[0], t.dims));
  const SyntheticSample a = generate_population(t, 20), b = generate_population(back, 20);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(a.data.observations[i].shares, b.data.observations[i].shares);

  const SyntheticSample s = generate_population(reference_truth(ReferenceDesign::TwoCluster, 3), 30);
  const Sidecar side = sidecar_from_json(sidecar_to_json(reference_truth(ReferenceDesign::TwoCluster, 3), s));
  EXPECT_EQ(side.labels, s.labels);
}

TEST(Synthgen, AssignmentMatchesBruteForce) {
  StreamRng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 1 + trial % 5;
    Mat score(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) score(i, j) = std::floor(10 * rng.uniform());
    const std::vector<int> got = optimal_assignment(score);
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1e300;
    do {
      double v = 0;
      for (int i = 0; i < k; ++i) v += score(i, perm[i]);
      best = std::max(best, v);
    } while (std::next_permutation(perm.begin(), perm.end()));
    double v = 0;
    std::vector<int> seen = got;
    std::sort(seen.begin(), seen.end());
    for (int i = 0; i < k; ++i) {
      EXPECT_EQ(seen[i], i);
      v += score(i, got[i]);
    }
    EXPECT_EQ(v, best);
  }
}

TEST(Synthgen, RecoveryOfTruthCenteredChain) {
  const GroundTruth t = reference_truth(ReferenceDesign::TwoCluster, 2);
  const SyntheticSample s = generate_population(t, 200);
  Chain chain;
  chain.dims = t.dims;
  chain.observations = 200;
  StreamRng rng(8);
  for (int draw = 0; draw < 100; ++draw) {
    SamplerState st;
    // chain labels swapped relative to the truth
    for (int j : {1, 0}) {
      Vec b = pack(t.coeffs[j], t.dims);
      for (Eigen::Index k = 0; k < b.size(); ++k) b(k) += 0.001 * rng.normal();
      st.beta.push_back(b);
    }
    st.gamma = t.gamma;
    st.sigma = {t.sigma[1], t.sigma[0]};
    st.phi = (Vec(2) << t.phi(1), t.phi(0)).finished();
    for (int l : s.labels) st.psi.push_back(1 - l);
    chain.snapshots.push_back(st);
  }
  const RecoveryReport r = recovery_report(t, chain, s.labels, representative_point(s.data));
  EXPECT_EQ(r.matching, (std::vector<int>{1, 0}));
  EXPECT_DOUBLE_EQ(r.assignment_accuracy, 1.0);
  EXPECT_GE(r.coverage, 0.9);
  EXPECT_LT(r.max_own_price_error, 0.05);
  EXPECT_FALSE(r.occupancy_collapse);
  EXPECT_NEAR(r.mean_occupancy.sum(), 1.0, 1e-12);
  EXPECT_NO_THROW(recovery_to_json(r));
}
