#pragma once

#include "easimix/dimensions.hpp"
#include "easimix/types.hpp"

#include <string>
#include <vector>

namespace easimix {

/// Eigenvalue tolerance for the cost-concavity check.
inline constexpr double kRegularityTolerance = 1e-10;
/// |1 - p'Bp/2| below this is treated as a degenerate implicit-utility map.
inline constexpr double kDegenerateDenominator = 1e-12;

/// Reduced (base-good-removed) EASI coefficients for the s modeled shares.
struct EasiCoefficients {
  std::vector<Vec> b;  // R + 1 Engel vectors, length s
  std::vector<Mat> A;  // M_p + 1 price blocks, s x s
  Mat B;               // price x utility, s x s
  Mat C;               // demographics, s x M
  Mat D;               // utility interactions, s x M_y

  static EasiCoefficients zero(const Dimensions& dims);
};

/// Coefficients completed with the base good so that every adding-up and
/// homogeneity restriction holds.
struct FullCoefficients {
  std::vector<Vec> b;  // length S
  std::vector<Mat> A;  // S x S
  Mat B;
  Mat C;  // S x M
  Mat D;  // S x M_y

  /// Sum over m of A_m h_m with h_0 = 1.
  Mat price_matrix(const Vec& h_p) const;
};

/// One consumer. Prices and expenditure are stored in logs; `rel_log_prices`
/// is log p_l - log p_S for the s modeled goods.
struct Observation {
  Vec shares;
  Vec latent;
  Vec log_prices;
  Vec rel_log_prices;
  double log_expenditure = 0.0;
  Vec h;
  Vec h_p;
  Vec h_y;
  Vec z;
  double weight = 1.0;

  std::vector<int> positive_goods() const;
};

/// A validated sample: shape constants, good names (base good last) and rows.
struct Dataset {
  Dimensions dims;
  std::vector<std::string> goods;
  std::vector<Observation> observations;

  int size() const { return static_cast<int>(observations.size()); }
};

/// Builds an Observation, deriving relative log prices and the initial latent
/// shares (censored goods at -0.1/S, positives by the degenerate-mass rule).
Observation make_observation(Vec shares, Vec log_prices, double log_expenditure, Vec h = Vec(),
                             Vec h_p = Vec(), Vec h_y = Vec(), Vec z = Vec(), double weight = 1.0);

/// Throws DimensionError when vector lengths disagree with `dims` and
/// DataError when shares are off the simplex.
void check_observation(const Observation& obs, const Dimensions& dims);

/// Implicit utility from observed shares:
///   y = (e - p'w + sum_m p'A_m p h_m / 2) / (1 - p'B p / 2).
double implicit_utility(const Vec& shares, const Vec& log_prices, double log_expenditure,
                        const Vec& h_p, const FullCoefficients& full);
double implicit_utility(const Observation& obs, const FullCoefficients& full);

/// Censors non-positive latent shares and renormalizes the rest.
Vec latent_to_observed(const Vec& latent);

/// Deterministic latent shares omega(p, y, h) for all S goods (no error term).
Vec predicted_shares(const FullCoefficients& full, const Vec& log_prices, double y, const Vec& h,
                     const Vec& h_p, const Vec& h_y);

/// x = [1, y, ..., y^R, h, h_y * y].
Vec exogenous_vector(double y, const Vec& h, const Vec& h_y, const Dimensions& dims);

/// p* = [p h_0, ..., p h_{M_p}, p y] with h_0 = 1.
Vec endogenous_vector(const Vec& rel_log_prices, double y, const Vec& h_p, const Dimensions& dims);

/// Padded per-observation designs: w* = F beta + eps, p* = G gamma + u.
struct DesignPair {
  Mat F;  // s x d_beta
  Mat G;  // d* x d_gamma
  Vec p_star;
  Vec x;
};

DesignPair build_designs(const Observation& obs, double y, const Dimensions& dims);

/// Coefficient vector layout: [vec of (b_0..b_R, C, D) rows per equation;
/// vech(A_0) .. vech(A_{M_p}), vech(B)] (row-major full blocks when the
/// symmetry restriction is off).
Vec pack(const EasiCoefficients& coeffs, const Dimensions& dims);
EasiCoefficients unpack(const Vec& beta, const Dimensions& dims);

FullCoefficients complete_system(const EasiCoefficients& coeffs, const Dimensions& dims);

struct Regularity {
  bool monotonic = false;
  bool concave = false;
  double monotonicity_index = 0.0;       // must be > 0
  double max_slutsky_eigenvalue = 0.0;   // must be <= tolerance
};

/// Normalized Slutsky matrix Gamma + w w' - diag(w).
Mat slutsky_matrix(const FullCoefficients& full, const Vec& shares, double y, const Vec& h_p);

Regularity check_regularity(const FullCoefficients& full, const Observation& obs, double y,
                            double tolerance = kRegularityTolerance);

}  // namespace easimix
