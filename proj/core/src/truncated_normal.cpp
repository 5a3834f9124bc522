#include "easimix/truncated_normal.hpp"

#include "easimix/linalg.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

namespace easimix {

namespace {
constexpr double kTailSwitch = 6.0;
}

double sample_normal_tail(double a, StreamRng& rng) {
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log(rng.uniform()) / rate;
    const double d = z - rate;
    if (std::log(rng.uniform()) <= -0.5 * d * d) return z;
  }
}

double sample_truncated_normal_upper(double mean, double sd, double upper, StreamRng& rng) {
  if (!(sd > 0.0) || !std::isfinite(sd)) throw NumericalError("truncated normal: invalid scale");
  const double b = (upper - mean) / sd;
  if (b < -kTailSwitch) return mean - sd * sample_normal_tail(-b, rng);
  static const boost::math::normal_distribution<double> std_normal;
  double z;
  if (b > 0.0) {
    // Work with the upper tail probability so that u * Phi(b) keeps precision.
    const double tail = boost::math::cdf(boost::math::complement(std_normal, b));
    const double u = rng.uniform();
    // Phi^{-1}(u Phi(b)) = -Phi^{-1}(1 - u Phi(b)); 1 - u Phi(b) = tail + (1-u) Phi(b).
    const double q = tail + (1.0 - u) * (1.0 - tail);
    z = -boost::math::quantile(std_normal, q);
  } else {
    const double p = boost::math::cdf(std_normal, b);
    z = boost::math::quantile(std_normal, rng.uniform() * p);
  }
  z = std::min(z, b);
  return mean + sd * z;
}

Vec sample_truncated_mvn_precision(const Vec& mean, const Mat& precision, StreamRng& rng,
                                   int sweeps, const Vec& start) {
  const Eigen::Index k = mean.size();
  if (precision.rows() != k || precision.cols() != k)
    throw DimensionError("truncated MVN: precision shape mismatch");
  if (!linalg::is_positive_definite(precision))
    throw NumericalError("truncated MVN: covariance not positive definite");
  if (sweeps < 1) throw Error("truncated MVN: need at least one sweep");

  Vec x(k);
  if (start.size() == k && (start.array() <= 0.0).all())
    x = start;
  else
    x = mean.cwiseMin(0.0);

  // A single coordinate is drawn exactly in one pass.
  if (k == 1) sweeps = 1;
  Vec sd(k);
  for (Eigen::Index j = 0; j < k; ++j) sd(j) = 1.0 / std::sqrt(precision(j, j));
  for (int sweep = 0; sweep < sweeps; ++sweep)
    for (Eigen::Index j = 0; j < k; ++j) {
      double shift = 0.0;
      for (Eigen::Index c = 0; c < k; ++c)
        if (c != j) shift += precision(j, c) * (x(c) - mean(c));
      const double m = mean(j) - shift / precision(j, j);
      x(j) = sample_truncated_normal_upper(m, sd(j), 0.0, rng);
    }
  return x;
}

Vec sample_truncated_mvn(const Vec& mean, const Mat& cov, StreamRng& rng, int sweeps,
                         const Vec& start) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw DimensionError("truncated MVN: covariance shape mismatch");
  if (!linalg::is_positive_definite(cov))
    throw NumericalError("truncated MVN: covariance not positive definite");
  return sample_truncated_mvn_precision(mean, linalg::spd_inverse(cov, "truncated MVN"), rng,
                                        sweeps, start);
}

}  // namespace easimix
