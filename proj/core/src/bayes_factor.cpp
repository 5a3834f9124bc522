#include "easimix/bayes_factor.hpp"

#include "easimix/linalg.hpp"
#include "easimix/random.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace easimix {

std::string BayesFactor::text() const {
  char buf[64];
  switch (kind) {
    case Kind::Point: std::snprintf(buf, sizeof buf, "%.2f", two_log_bf); break;
    case Kind::LowerBound: std::snprintf(buf, sizeof buf, "> %.2f", two_log_bf); break;
    case Kind::UpperBound: std::snprintf(buf, sizeof buf, "< %.2f", two_log_bf); break;
    case Kind::Indeterminate: return "indeterminate";
  }
  return buf;
}

Mat symmetry_gap_map(const Dimensions& dims) {
  if (dims.symmetric) throw DimensionError("symmetry gaps need an unrestricted parameterization");
  const int s = dims.modeled();
  const int pairs = s * (s - 1) / 2;
  const int base = s * dims.exogenous();
  const int bw = dims.block_width();
  Mat map = Mat::Zero(dims.price_blocks() * pairs, dims.beta_dim());
  int row = 0;
  for (int m = 0; m < dims.price_blocks(); ++m)
    for (int l = 0; l < s; ++l)
      for (int k = l + 1; k < s; ++k) {
        map(row, base + m * bw + l * s + k) = 1.0;
        map(row, base + m * bw + k * s + l) = -1.0;
        ++row;
      }
  return map;
}

Vec symmetry_gaps(const Vec& beta, const Dimensions& dims) {
  if (beta.size() != dims.beta_dim()) throw DimensionError("symmetry gaps: packed length mismatch");
  return symmetry_gap_map(dims) * beta;
}

double log_kde_density(const Mat& samples, const Vec& point) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  if (n < 2) throw Error("kernel density needs at least two samples");
  if (point.size() != d) throw DimensionError("kernel density: point dimension mismatch");
  const Vec mean = samples.colwise().mean();
  Vec bandwidth(d);
  const double factor = std::pow(4.0 / ((d + 2.0) * n), 1.0 / (d + 4.0));
  for (Eigen::Index c = 0; c < d; ++c) {
    const double var = (samples.col(c).array() - mean(c)).square().sum() / (n - 1.0);
    if (!(var > 0.0)) throw NumericalError("kernel density: a coordinate has zero spread");
    bandwidth(c) = std::sqrt(var) * factor;
  }
  Vec log_k(n);
  for (Eigen::Index i = 0; i < n; ++i)
    log_k(i) = -0.5 * ((samples.row(i).transpose() - point).array() / bandwidth.array()).square().sum();
  const double top = log_k.maxCoeff();
  const double lse = top + std::log((log_k.array() - top).exp().sum());
  return lse - std::log(static_cast<double>(n)) - bandwidth.array().log().sum() -
         0.5 * d * std::log(2.0 * std::numbers::pi);
}

BayesFactor bayes_factor_symmetry(const Chain& chain, std::optional<int> cluster) {
  const Dimensions& dims = chain.dims;
  const Mat map = symmetry_gap_map(dims);
  std::vector<int> clusters;
  if (cluster) {
    if (*cluster < 0 || *cluster >= dims.clusters) throw Error("symmetry Bayes factor: cluster out of range");
    clusters.push_back(*cluster);
  } else {
    for (int j = 0; j < dims.clusters; ++j) clusters.push_back(j);
  }
  const auto per = map.rows();
  const auto dim = per * static_cast<Eigen::Index>(clusters.size());
  if (dim == 0) throw DimensionError("symmetry Bayes factor: a single modeled share has no symmetry restriction");
  const auto n = static_cast<Eigen::Index>(chain.snapshots.size());
  if (n < 50 * dim)
    throw Error("symmetry Bayes factor: " + std::to_string(n) + " draws for " + std::to_string(dim) +
                " gap coordinates; need at least " + std::to_string(50 * dim));

  Mat gaps(n, dim);
  for (Eigen::Index t = 0; t < n; ++t)
    for (std::size_t c = 0; c < clusters.size(); ++c)
      gaps.row(t).segment(static_cast<Eigen::Index>(c) * per, per) =
          (map * chain.snapshots[t].beta[clusters[c]]).transpose();
  const double log_post = log_kde_density(gaps, Vec::Zero(dim));

  double log_prior = 0.0;
  for (int j : clusters) {
    const Vec mean = map * chain.priors.beta_mean[j];
    const Mat cov = map * chain.priors.beta_cov[j] * map.transpose();
    const Mat l = linalg::robust_cholesky(cov, "prior gap covariance");
    const Vec z = l.triangularView<Eigen::Lower>().solve(-mean);
    log_prior += -0.5 * z.squaredNorm() - 0.5 * linalg::log_det_from_cholesky(l) -
                 0.5 * per * std::log(2.0 * std::numbers::pi);
  }
  BayesFactor bf;
  bf.two_log_bf = 2.0 * (log_post - log_prior);
  bf.draws = static_cast<std::size_t>(n);
  bf.posterior_probability = std::exp(log_post);
  bf.prior_probability = std::exp(log_prior);
  return bf;
}

BayesFactor odds_ratio_factor(std::size_t post_hits, std::size_t post_total, std::size_t prior_hits,
                              std::size_t prior_total) {
  if (post_total == 0 || prior_total == 0) throw Error("inequality Bayes factor: no draws");
  BayesFactor bf;
  bf.draws = post_total;
  bf.posterior_probability = static_cast<double>(post_hits) / post_total;
  bf.prior_probability = static_cast<double>(prior_hits) / prior_total;
  // Each probability is either interior (exact log odds), or at a boundary,
  // where the log odds are bounded by +-log(T).
  auto log_odds = [](std::size_t hits, std::size_t total, int& side) {
    if (hits == total) {
      side = 1;
      return std::log(static_cast<double>(total));
    }
    if (hits == 0) {
      side = -1;
      return -std::log(static_cast<double>(total));
    }
    side = 0;
    return std::log(static_cast<double>(hits) / static_cast<double>(total - hits));
  };
  int post_side = 0, prior_side = 0;
  const double lp = log_odds(post_hits, post_total, post_side);
  const double lq = log_odds(prior_hits, prior_total, prior_side);
  bf.two_log_bf = 2.0 * (lp - lq);
  // The factor rises with posterior odds and falls with prior odds.
  const int up = post_side - prior_side;
  if (post_side == 0 && prior_side == 0)
    bf.kind = BayesFactor::Kind::Point;
  else if ((post_side != 0 && prior_side != 0 && post_side == prior_side))
    bf.kind = BayesFactor::Kind::Indeterminate;
  else
    bf.kind = up > 0 ? BayesFactor::Kind::LowerBound : BayesFactor::Kind::UpperBound;
  return bf;
}

namespace {

bool passes(const FullCoefficients& full, const Observation& obs, Inequality which) {
  double y;
  try {
    y = implicit_utility(obs, full);
  } catch (const NumericalError&) {
    return false;
  }
  const Regularity r = check_regularity(full, obs, y);
  return which == Inequality::Monotonicity ? r.monotonic : r.concave;
}

}  // namespace

BayesFactor bayes_factor_inequality(const Chain& chain, const Dataset& data, Inequality which,
                                    const std::vector<int>& eval_points, int prior_draws,
                                    std::uint64_t seed) {
  const Dimensions& dims = chain.dims;
  if (chain.snapshots.empty()) throw Error("inequality Bayes factor: chain has no retained draws");
  if (!(dims == data.dims) || chain.observations != data.size())
    throw DimensionError("inequality Bayes factor: chain and dataset do not match");
  if (eval_points.empty()) throw Error("inequality Bayes factor: no evaluation points");
  for (int i : eval_points)
    if (i < 0 || i >= data.size()) throw Error("inequality Bayes factor: evaluation point out of range");
  if (prior_draws < 1) throw Error("inequality Bayes factor: need prior draws");

  auto all_pass = [&](const std::vector<Vec>& beta, const std::vector<int>& psi) {
    std::vector<FullCoefficients> full;
    for (const auto& b : beta) full.push_back(complete_system(unpack(b, dims), dims));
    for (int i : eval_points)
      if (!passes(full[psi[i]], data.observations[i], which)) return false;
    return true;
  };

  std::size_t post_hits = 0;
  for (const auto& snap : chain.snapshots)
    if (all_pass(snap.beta, snap.psi)) ++post_hits;

  const PriorHyperparams& pr = chain.priors;
  std::vector<Mat> chol;
  for (int j = 0; j < dims.clusters; ++j) chol.push_back(linalg::robust_cholesky(pr.beta_cov[j], "beta prior"));
  std::size_t prior_hits = 0;
  std::vector<int> psi(data.size(), 0);
  for (int k = 0; k < prior_draws; ++k) {
    StreamRng rng(seed, static_cast<std::uint64_t>(k), 99, 0);
    const Vec phi = sample::dirichlet(pr.alpha, rng);
    const Vec log_phi = phi.array().log();
    for (int i : eval_points) psi[i] = dims.clusters == 1 ? 0 : sample::categorical_log(log_phi, rng);
    std::vector<Vec> beta;
    for (int j = 0; j < dims.clusters; ++j) beta.push_back(sample::mvn_chol(pr.beta_mean[j], chol[j], rng));
    if (all_pass(beta, psi)) ++prior_hits;
  }
  return odds_ratio_factor(post_hits, chain.snapshots.size(), prior_hits, static_cast<std::size_t>(prior_draws));
}

}  // namespace easimix
