#pragma once

#include "easimix/types.hpp"

#include <string_view>

namespace easimix::linalg {

/// Lower Cholesky factor with escalating diagonal jitter (1e-10, 1e-8, 1e-6,
/// relative to the mean absolute diagonal). Throws NumericalError naming
/// `context` when all retries fail.
Mat robust_cholesky(const Mat& a, std::string_view context);

/// Inverse of a symmetric positive-definite matrix through robust_cholesky.
Mat spd_inverse(const Mat& a, std::string_view context);

double log_det_from_cholesky(const Mat& lower);

bool is_positive_definite(const Mat& a);

bool is_symmetric(const Mat& a, double tol = 1e-12);

inline Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

/// Position of entry (r, c), r >= c, in the column-major half-vectorization of
/// an n x n matrix.
inline int vech_index(int r, int c, int n) {
  if (r < c) std::swap(r, c);
  return c * n - c * (c - 1) / 2 + (r - c);
}

Vec vech(const Mat& a);
Mat unvech(const Vec& v, int n);

/// n^2 x n(n+1)/2 duplication matrix with D * vech(A) = vec(A).
Mat duplication_matrix(int n);

/// Kronecker product a (x) b.
Mat kron(const Mat& a, const Mat& b);

}  // namespace easimix::linalg
