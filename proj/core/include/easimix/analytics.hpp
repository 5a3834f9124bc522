#pragma once

#include "easimix/easi.hpp"
#include "easimix/gibbs.hpp"
#include "easimix/summary.hpp"
#include "easimix/types.hpp"

#include <vector>

namespace easimix {

/// Where elasticities are evaluated. Shares must be strictly positive.
struct EvaluationPoint {
  Vec shares;
  Vec log_prices;
  double log_expenditure = 0.0;
  Vec h;
  Vec h_p;
  Vec h_y;
};

EvaluationPoint evaluation_point(const Observation& obs);

/// Weighted means of shares, raw prices and raw expenditure; covariates at
/// weighted means, except integer-valued columns, which take their weighted
/// mode.
EvaluationPoint representative_point(const Dataset& data);

struct SemiElasticities {
  Mat gamma;  // sum_m A_m h_m + B y
  Vec dy;     // d omega / d y
  Vec de;     // d w / d e, Marshallian
};

SemiElasticities semi_elasticities(const FullCoefficients& full, const EvaluationPoint& at, double y);

struct PriceElasticities {
  Mat hicksian;
  Mat marshallian;
};

/// Closed-form elasticities from the semi-elasticities:
///   H_lj = -1(l=j) + G_lj / w_l + w_j
///   M_lj = -1(l=j) + G_lj / w_l - (w_j / w_l) de_l
/// The Marshallian form ignores the feedback of prices on y through the
/// Stone index and is exact when log prices are zero.
PriceElasticities price_elasticities(const Mat& gamma, const Vec& de, const Vec& shares);

/// eta_j = de_j / w_j + 1.
Vec income_elasticities(const Vec& de, const Vec& shares);

/// Exact Marshallian share derivatives dw/dp (S x S), including the price
/// feedback on y through the implicit-utility equation.
Mat marshallian_share_derivatives(const FullCoefficients& full, const EvaluationPoint& at, double y,
                                  const SemiElasticities& semi);

struct ElasticitySet {
  Mat hicksian;
  Mat marshallian;  // exact
  Vec income;
  Mat gamma_semi;
  Vec dy_semi;
  Vec de_semi;
  EvaluationPoint evaluated_at;
  double y = 0.0;
};

ElasticitySet elasticities(const FullCoefficients& full, const EvaluationPoint& at);

/// Model Engel curves: row g holds sum_r b_r e_g^r + C h + D h_y e_g.
Mat engel_curve(const FullCoefficients& full, const Vec& h, const Vec& h_y, const Vec& e_grid);

/// Element-wise posterior summaries of an r x c quantity.
struct MatrixSummary {
  int rows = 0;
  int cols = 0;
  std::vector<PosteriorSummary> cells;  // row-major

  const PosteriorSummary& operator()(int r, int c) const { return cells[r * cols + c]; }
};

MatrixSummary summarize_matrices(const std::vector<Mat>& draws, double mass = kDefaultHpdMass);

struct ElasticityPosterior {
  int cluster = 0;
  MatrixSummary hicksian;
  MatrixSummary marshallian;
  MatrixSummary income;  // S x 1
};

/// One posterior summary per cluster, evaluating every retained draw.
std::vector<ElasticityPosterior> posterior_elasticities(const Chain& chain, const EvaluationPoint& at,
                                                        double mass = kDefaultHpdMass);

/// Fraction of retained draws with psi_i = j (n x J).
Mat inclusion_probabilities(const Chain& chain);

/// Modal cluster per observation.
std::vector<int> modal_assignments(const Chain& chain);

}  // namespace easimix
