#include "easimix/linalg.hpp"

#include <array>
#include <cmath>
#include <string>

namespace easimix::linalg {

Mat robust_cholesky(const Mat& a, std::string_view context) {
  if (a.rows() != a.cols())
    throw DimensionError("cholesky of non-square matrix in " + std::string(context));
  if (a.rows() == 0) return Mat(0, 0);
  Eigen::LLT<Mat> llt(a);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  const double scale = std::max(1.0, a.diagonal().cwiseAbs().mean());
  constexpr std::array<double, 3> jitters{1e-10, 1e-8, 1e-6};
  for (double jitter : jitters) {
    Mat b = a;
    b.diagonal().array() += jitter * scale;
    llt.compute(b);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw NumericalError("matrix not positive definite after jitter retries (" + std::string(context) +
                       ")");
}

Mat spd_inverse(const Mat& a, std::string_view context) {
  const Mat l = robust_cholesky(a, context);
  const Mat linv = l.triangularView<Eigen::Lower>().solve(Mat::Identity(a.rows(), a.cols()));
  return linv.transpose() * linv;
}

double log_det_from_cholesky(const Mat& lower) {
  return 2.0 * lower.diagonal().array().log().sum();
}

bool is_positive_definite(const Mat& a) {
  if (a.rows() != a.cols()) return false;
  if (!a.allFinite()) return false;
  Eigen::LLT<Mat> llt(a);
  return llt.info() == Eigen::Success;
}

bool is_symmetric(const Mat& a, double tol) {
  if (a.rows() != a.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) {
      const double scale = std::max({1.0, std::abs(a(i, j)), std::abs(a(j, i))});
      if (std::abs(a(i, j) - a(j, i)) > tol * scale) return false;
    }
  return true;
}

Vec vech(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  Vec v(n * (n + 1) / 2);
  for (int c = 0; c < n; ++c)
    for (int r = c; r < n; ++r) v(vech_index(r, c, n)) = a(r, c);
  return v;
}

Mat unvech(const Vec& v, int n) {
  if (v.size() != n * (n + 1) / 2) throw DimensionError("unvech: length does not match n");
  Mat a(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = c; r < n; ++r) a(r, c) = a(c, r) = v(vech_index(r, c, n));
  return a;
}

Mat duplication_matrix(int n) {
  Mat d = Mat::Zero(n * n, n * (n + 1) / 2);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) d(c * n + r, vech_index(r, c, n)) = 1.0;
  return d;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace easimix::linalg
