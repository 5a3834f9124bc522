#include "easimix/random.hpp"

#include "easimix/linalg.hpp"

#include <cmath>
#include <random>

namespace easimix {

std::uint64_t StreamRng::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

StreamRng::StreamRng(std::uint64_t seed, std::uint64_t sweep, std::uint64_t stage,
                     std::uint64_t index) {
  std::uint64_t key = mix(seed + 0x632be59bd9b4e019ULL);
  key = mix(key ^ (sweep + 0x9e3779b97f4a7c15ULL));
  key = mix(key ^ (stage * 0xd1b54a32d192ed03ULL + 1));
  key = mix(key ^ (index + 0x8cb92ba72f3d8dd7ULL));
  state_ = key;
}

double StreamRng::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double StreamRng::normal() {
  std::normal_distribution<double> dist;
  return dist(*this);
}

double StreamRng::gamma(double shape) {
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(*this);
}

namespace sample {

Vec mvn_chol(const Vec& mean, const Mat& lower, StreamRng& rng) {
  Vec z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + lower.triangularView<Eigen::Lower>() * z;
}

Vec mvn_precision(const Mat& precision_lower, const Vec& rhs, StreamRng& rng) {
  const auto l = precision_lower.triangularView<Eigen::Lower>();
  Vec mean = l.solve(rhs);
  mean = l.transpose().solve(mean);
  Vec z(rhs.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + l.transpose().solve(z);
}

Mat wishart(double dof, const Mat& scale, StreamRng& rng) {
  const int k = static_cast<int>(scale.rows());
  if (dof <= k - 1) throw NumericalError("Wishart degrees of freedom too small");
  const Mat l = linalg::robust_cholesky(scale, "Wishart scale");
  Mat bartlett = Mat::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    bartlett(i, i) = std::sqrt(rng.chi_squared(dof - i));
    for (int j = 0; j < i; ++j) bartlett(i, j) = rng.normal();
  }
  const Mat la = l * bartlett;
  return la * la.transpose();
}

Mat inverse_wishart(double dof, const Mat& scale, StreamRng& rng) {
  const int k = static_cast<int>(scale.rows());
  if (dof <= k - 1) throw NumericalError("inverse-Wishart degrees of freedom too small");
  // X^{-1} ~ Wishart(dof, scale^{-1}); with scale^{-1} = L^{-T} L^{-1},
  // X = (L^{-T} A)^{-T} (L^{-T} A)^{-1} = L A^{-T} A^{-1} L'.
  const Mat l = linalg::robust_cholesky(scale, "inverse-Wishart scale");
  Mat bartlett = Mat::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    bartlett(i, i) = std::sqrt(rng.chi_squared(dof - i));
    for (int j = 0; j < i; ++j) bartlett(i, j) = rng.normal();
  }
  // T = L A^{-T}: solve A' T' = L'  (A lower, so A' upper).
  const Mat t = bartlett.triangularView<Eigen::Lower>().solve(l.transpose()).transpose();
  Mat x = t * t.transpose();
  return linalg::symmetrize(x);
}

Mat matrix_normal(const Mat& mean, const Mat& row_cov, const Mat& col_cov, StreamRng& rng) {
  const Mat lr = linalg::robust_cholesky(row_cov, "matrix-normal row covariance");
  const Mat lc = linalg::robust_cholesky(col_cov, "matrix-normal column covariance");
  Mat z(mean.rows(), mean.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = rng.normal();
  return mean + lr * z * lc.transpose();
}

Vec dirichlet(const Vec& alpha, StreamRng& rng) {
  Vec g(alpha.size());
  for (Eigen::Index j = 0; j < alpha.size(); ++j) g(j) = rng.gamma(alpha(j));
  const double total = g.sum();
  if (!(total > 0.0)) {
    // All gamma draws underflowed (tiny alphas): fall back to the largest alpha.
    g.setZero();
    Eigen::Index best = 0;
    alpha.maxCoeff(&best);
    g(best) = 1.0;
    return g;
  }
  return g / total;
}

int categorical_log(const Vec& log_weights, StreamRng& rng) {
  const double top = log_weights.maxCoeff();
  if (!std::isfinite(top)) throw NumericalError("categorical draw with non-finite log weights");
  Vec p = (log_weights.array() - top).exp();
  const double u = rng.uniform() * p.sum();
  double cum = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    cum += p(j);
    if (u < cum) return static_cast<int>(j);
  }
  return static_cast<int>(p.size() - 1);
}

}  // namespace sample
}  // namespace easimix
