#pragma once

#include "easimix/types.hpp"

namespace easimix {

/// Shape constants of an EASI system with endogenous prices.
///
/// `goods` is the full number of goods S; the last good (after any reordering
/// performed at ingestion) is the base category, so `modeled()` = S - 1 shares
/// enter the sampler. Price blocks are the M_p + 1 price matrices A_m plus the
/// price-by-utility matrix B. With `symmetric` set, each block is stored as a
/// half-vectorization; otherwise as the full row-major s x s block.
struct Dimensions {
  int goods = 3;
  int degree = 1;
  int demographics = 0;
  int price_covariates = 0;
  int utility_covariates = 0;
  int instruments = 0;
  int clusters = 1;
  bool symmetric = true;

  int modeled() const { return goods - 1; }
  // 1 + R + M + M_y: the exogenous vector x = [1, y, ..., y^R, h, h_y * y].
  int exogenous() const { return 1 + degree + demographics + utility_covariates; }
  int price_blocks() const { return price_covariates + 2; }
  // d* = s (M_p + 2)
  int endogenous() const { return modeled() * price_blocks(); }
  int block_width() const {
    const int s = modeled();
    return symmetric ? s * (s + 1) / 2 : s * s;
  }
  int beta_dim() const { return modeled() * exogenous() + price_blocks() * block_width(); }
  int gamma_dim() const { return endogenous() * (exogenous() + instruments); }
  // Joint error dimension s (M_p + 3).
  int error_dim() const { return modeled() + endogenous(); }
  // Rows of the compact structural design [x; p*].
  int structural_rows() const { return exogenous() + endogenous(); }
  int first_stage_rows() const { return exogenous() + instruments; }

  /// Throws DimensionError when counts are inconsistent. The order condition
  /// ell >= d* is only enforced when `require_identification` is set, since
  /// exogenous-price fits (no instruments) are legitimate diagnostics.
  void validate(bool require_identification = false) const;

  bool operator==(const Dimensions&) const = default;
};

}  // namespace easimix
