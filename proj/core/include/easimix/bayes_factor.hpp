#pragma once

#include "easimix/easi.hpp"
#include "easimix/gibbs.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace easimix {

struct BayesFactor {
  enum class Kind { Point, LowerBound, UpperBound, Indeterminate };
  Kind kind = Kind::Point;
  double two_log_bf = 0.0;  // the value, or the bound
  double posterior_probability = 0.0;
  double prior_probability = 0.0;
  std::size_t draws = 0;

  /// "17.58", "> 13.82", "< -13.82" or "indeterminate".
  std::string text() const;
};

/// Gap coordinates a_lk - a_kl (l < k) of every price block, for one packed
/// coefficient vector of an unrestricted model.
Vec symmetry_gaps(const Vec& beta, const Dimensions& dims);
/// The linear map beta -> gaps as a matrix.
Mat symmetry_gap_map(const Dimensions& dims);

/// Log density at `point` of a Gaussian product-kernel estimate with
/// Silverman bandwidths, evaluated in log space.
double log_kde_density(const Mat& samples, const Vec& point);

/// Savage-Dickey 2 log BF for symmetry of every price block, using the
/// draws of one cluster, or of all clusters jointly when `cluster` is empty.
/// The chain must come from an unrestricted fit and hold at least 50 draws
/// per gap coordinate.
BayesFactor bayes_factor_symmetry(const Chain& unrestricted, std::optional<int> cluster = std::nullopt);

enum class Inequality { Monotonicity, Concavity };

/// 2 log BF for a regularity condition holding at every evaluation point.
/// Posterior probability: share of retained draws in which each listed
/// observation passes the check with its own cluster's coefficients. Prior
/// probability: the same check on `prior_draws` draws of (phi, psi, beta)
/// from the prior.
BayesFactor bayes_factor_inequality(const Chain& chain, const Dataset& data, Inequality which,
                                    const std::vector<int>& eval_points, int prior_draws = 1000,
                                    std::uint64_t seed = 1);

/// Bound conventions shared by the inequality factor: a probability of 1 in
/// T draws counts as odds above T, a probability of 0 as odds below 1/T.
BayesFactor odds_ratio_factor(std::size_t post_hits, std::size_t post_total, std::size_t prior_hits,
                              std::size_t prior_total);

}  // namespace easimix
