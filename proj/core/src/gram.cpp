#include "easimix/gram.hpp"

#include "easimix/linalg.hpp"

namespace easimix {

KroneckerLayout KroneckerLayout::for_beta(const Dimensions& dims) {
  KroneckerLayout layout;
  const int s = dims.modeled();
  const int nx = dims.exogenous();
  const int bw = dims.block_width();
  layout.equations = s;
  layout.rows = dims.structural_rows();
  layout.packed_dim = dims.beta_dim();
  layout.packed_index.resize(static_cast<std::size_t>(s) * layout.rows);
  for (int l = 0; l < s; ++l) {
    for (int r = 0; r < nx; ++r) layout.packed_index[l * layout.rows + r] = l * nx + r;
    for (int m = 0; m < dims.price_blocks(); ++m)
      for (int k = 0; k < s; ++k) {
        const int col = dims.symmetric ? linalg::vech_index(l, k, s) : l * s + k;
        layout.packed_index[l * layout.rows + nx + m * s + k] = s * nx + m * bw + col;
      }
  }
  return layout;
}

KroneckerLayout KroneckerLayout::for_gamma(const Dimensions& dims) {
  KroneckerLayout layout;
  const int ds = dims.endogenous();
  const int nx = dims.exogenous();
  const int ell = dims.instruments;
  layout.equations = ds;
  layout.rows = dims.first_stage_rows();
  layout.packed_dim = dims.gamma_dim();
  layout.packed_index.resize(static_cast<std::size_t>(ds) * layout.rows);
  for (int k = 0; k < ds; ++k) {
    for (int r = 0; r < nx; ++r) layout.packed_index[k * layout.rows + r] = k * nx + r;
    for (int r = 0; r < ell; ++r) layout.packed_index[k * layout.rows + nx + r] = ds * nx + k * ell + r;
  }
  return layout;
}

Mat KroneckerLayout::to_check(const Vec& packed) const {
  if (packed.size() != packed_dim) throw DimensionError("to_check: packed length mismatch");
  Mat check(rows, equations);
  for (int l = 0; l < equations; ++l)
    for (int r = 0; r < rows; ++r) check(r, l) = packed(packed_index[l * rows + r]);
  return check;
}

Mat KroneckerLayout::selection() const {
  Mat p = Mat::Zero(static_cast<Eigen::Index>(equations) * rows, packed_dim);
  for (std::size_t u = 0; u < packed_index.size(); ++u) p(static_cast<Eigen::Index>(u), packed_index[u]) = 1.0;
  return p;
}

GramResult weighted_gram_from_products(const Mat& cross, const Mat& cross_targets,
                                       const Mat& weight, const KroneckerLayout& layout) {
  const int q = layout.equations;
  const int nf = layout.rows;
  if (weight.rows() != q || weight.cols() != q) throw DimensionError("weighted_gram: weight shape");
  if (cross.rows() != nf || cross.cols() != nf) throw DimensionError("weighted_gram: cross shape");
  if (cross_targets.rows() != nf || cross_targets.cols() != q)
    throw DimensionError("weighted_gram: target cross-product shape");
  if (!linalg::is_symmetric(weight)) throw NumericalError("weighted_gram: weight matrix is not symmetric");

  GramResult out{Mat::Zero(layout.packed_dim, layout.packed_dim), Vec::Zero(layout.packed_dim)};
  // vec(R' T S): column l of R'T S.
  const Mat rhs = cross_targets * weight;
  for (int l = 0; l < q; ++l)
    for (int r = 0; r < nf; ++r) out.vector(layout.packed_index[l * nf + r]) += rhs(r, l);
  // Block (l, k) of S (x) R'R is S(l, k) R'R.
  for (int l = 0; l < q; ++l)
    for (int k = 0; k < q; ++k) {
      const double w = weight(l, k);
      if (w == 0.0) continue;
      const int* rows_l = &layout.packed_index[l * nf];
      const int* rows_k = &layout.packed_index[k * nf];
      for (int b = 0; b < nf; ++b) {
        const int pb = rows_k[b];
        for (int a = 0; a < nf; ++a) out.matrix(rows_l[a], pb) += w * cross(a, b);
      }
    }
  return out;
}

GramResult weighted_gram(const Mat& rows, const Mat& targets, const Mat& weight,
                         const KroneckerLayout& layout) {
  if (rows.cols() != layout.rows) throw DimensionError("weighted_gram: row width mismatch");
  if (targets.rows() != rows.rows() || targets.cols() != layout.equations)
    throw DimensionError("weighted_gram: target shape mismatch");
  Mat cross(layout.rows, layout.rows);
  cross.triangularView<Eigen::Lower>() = rows.transpose() * rows;
  cross = cross.selfadjointView<Eigen::Lower>();
  const Mat cross_targets = rows.transpose() * targets;
  return weighted_gram_from_products(cross, cross_targets, weight, layout);
}

Mat padded_design(const Vec& row, const KroneckerLayout& layout) {
  if (row.size() != layout.rows) throw DimensionError("padded_design: row width mismatch");
  Mat f = Mat::Zero(layout.equations, layout.packed_dim);
  for (int l = 0; l < layout.equations; ++l)
    for (int r = 0; r < layout.rows; ++r) f(l, layout.packed_index[l * layout.rows + r]) += row(r);
  return f;
}

}  // namespace easimix
