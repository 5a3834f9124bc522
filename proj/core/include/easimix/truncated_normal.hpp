#pragma once

#include "easimix/random.hpp"
#include "easimix/types.hpp"

namespace easimix {

inline constexpr int kDefaultTruncatedSweeps = 10;

/// One draw from N(mean, sd^2) restricted to (-inf, upper].
double sample_truncated_normal_upper(double mean, double sd, double upper, StreamRng& rng);

/// One draw from N(0, 1) restricted to [a, inf), a > 0, by exponential
/// proposal rejection.
double sample_normal_tail(double a, StreamRng& rng);

/// Draw from N(mean, cov) restricted to the non-positive orthant by
/// coordinate-wise Gibbs. `start`, when non-empty and inside the orthant, is
/// the initial point; otherwise min(mean, 0) is used.
Vec sample_truncated_mvn(const Vec& mean, const Mat& cov, StreamRng& rng,
                         int sweeps = kDefaultTruncatedSweeps, const Vec& start = Vec());

/// As above, parameterized by the precision matrix.
Vec sample_truncated_mvn_precision(const Vec& mean, const Mat& precision, StreamRng& rng,
                                   int sweeps = kDefaultTruncatedSweeps, const Vec& start = Vec());

}  // namespace easimix
