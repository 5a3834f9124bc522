#pragma once

#include "easimix/dimensions.hpp"
#include "easimix/types.hpp"

#include <vector>

namespace easimix {

/// Maps the compact "check" layout onto a packed coefficient vector.
///
/// Every padded design of the form F_i = (I_s (x) f_i') P can be written with
/// a compact regressor row f_i (length `rows`) shared by all `equations`
/// equations; P selects packed coefficients from vec(check), where check is
/// rows x equations. `packed_index[l * rows + r]` is the packed coordinate
/// fed by check(r, l). Several check entries may share one packed coordinate
/// (symmetric price blocks).
struct KroneckerLayout {
  int equations = 0;
  int rows = 0;
  int packed_dim = 0;
  std::vector<int> packed_index;

  /// Structural system: f_i = [x_i; p*_i], packed into beta.
  static KroneckerLayout for_beta(const Dimensions& dims);
  /// First stage: g_i = [x_i; z_i], equations are the d* endogenous terms.
  static KroneckerLayout for_gamma(const Dimensions& dims);

  /// check matrix (rows x equations) implied by a packed vector.
  Mat to_check(const Vec& packed) const;
  /// Explicit 0/1 selection matrix P (equations*rows x packed_dim).
  Mat selection() const;
};

struct GramResult {
  Mat matrix;  // sum_i F_i' S F_i
  Vec vector;  // sum_i F_i' S t_i
};

/// Sum over observations of F_i' S F_i and F_i' S t_i, where F_i is the padded
/// design implied by `rows.row(i)` and `layout`. Computed through
/// S (x) (R'R) and vec(R' T S), then scattered into the packed ordering.
/// `rows` is n x layout.rows, `targets` is n x layout.equations.
GramResult weighted_gram(const Mat& rows, const Mat& targets, const Mat& weight,
                         const KroneckerLayout& layout);

/// Same accumulation when the cross products R'R and R'T are already known.
GramResult weighted_gram_from_products(const Mat& cross, const Mat& cross_targets,
                                       const Mat& weight, const KroneckerLayout& layout);

/// Padded design for one compact row, (I (x) f') P. Used by oracles and tools.
Mat padded_design(const Vec& row, const KroneckerLayout& layout);

}  // namespace easimix
