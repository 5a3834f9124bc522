#pragma once

#include "easimix/types.hpp"

#include <cstdint>
#include <limits>

namespace easimix {

/// SplitMix64 stream keyed by (seed, sweep, stage, index).
///
/// Each (sweep, stage, index) triple gets an independent stream, so draws for
/// observation i in sweep t are the same no matter how observations are split
/// across workers.
class StreamRng {
public:
  using result_type = std::uint64_t;

  StreamRng() : StreamRng(0) {}
  explicit StreamRng(std::uint64_t seed, std::uint64_t sweep = 0, std::uint64_t stage = 0,
                     std::uint64_t index = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double gamma(double shape);
  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  static std::uint64_t mix(std::uint64_t z);

private:
  std::uint64_t state_;
};

namespace sample {

/// Draw from N(mean, L L') given the lower Cholesky factor L.
Vec mvn_chol(const Vec& mean, const Mat& lower, StreamRng& rng);

/// Draw from N(P^{-1} b, P^{-1}) given the lower Cholesky factor of P.
Vec mvn_precision(const Mat& precision_lower, const Vec& rhs, StreamRng& rng);

/// Wishart(dof, scale) via the Bartlett decomposition.
Mat wishart(double dof, const Mat& scale, StreamRng& rng);

/// Inverse-Wishart(dof, scale): density proportional to
/// |X|^{-(dof+k+1)/2} exp(-tr(scale X^{-1})/2).
Mat inverse_wishart(double dof, const Mat& scale, StreamRng& rng);

/// Matrix normal MN(mean, row_cov, col_cov).
Mat matrix_normal(const Mat& mean, const Mat& row_cov, const Mat& col_cov, StreamRng& rng);

Vec dirichlet(const Vec& alpha, StreamRng& rng);

/// Index drawn with probabilities proportional to exp(log_weights), by
/// inverse CDF on one uniform; exact ties resolve to the lower index.
int categorical_log(const Vec& log_weights, StreamRng& rng);

}  // namespace sample
}  // namespace easimix
