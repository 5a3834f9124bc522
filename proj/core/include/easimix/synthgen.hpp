#pragma once

#include "easimix/analytics.hpp"
#include "easimix/easi.hpp"
#include "easimix/gibbs.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace easimix {

/// Distributions of the exogenous inputs. Covariate columns flagged binary
/// are Bernoulli(0.5); the rest are standard normal.
struct CovariateSpec {
  std::vector<bool> h_binary;
  std::vector<bool> h_p_binary;
  std::vector<bool> h_y_binary;
  double log_expenditure_mean = 4.0;
  double log_expenditure_sd = 0.5;
  double base_log_price_mean = 0.0;
  double base_log_price_sd = 0.1;
  double instrument_sd = 1.0;
};

/// Data-generating parameters. Prices follow the first-stage rows of the
/// price block, p = G_p gamma + u_p; the remaining rows of gamma and the
/// matching parts of Sigma are carried for reference but do not enter the
/// generator.
struct GroundTruth {
  Dimensions dims;
  std::vector<std::string> goods;
  std::vector<EasiCoefficients> coeffs;
  Vec gamma;
  std::vector<Mat> sigma;  // (s + d*) square per cluster
  Vec phi;
  CovariateSpec covariates;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticSample {
  Dataset data;
  std::vector<int> labels;   // 0-based true clusters
  std::vector<Vec> latent;   // true latent shares (S-vectors)
  Vec y;                     // implicit utility at the fixed point
  double censoring_rate = 0.0;  // share of observations with a zero share
};

/// Forward simulation; identical output for identical truth (seed included).
SyntheticSample generate_population(const GroundTruth& truth, int n);

enum class ReferenceDesign {
  TwoCluster,  // J = 2, three goods, endogenous prices, censoring
  Symmetric,   // J = 1, symmetric price blocks
  Asymmetric,  // J = 1, strongly asymmetric price blocks
};

GroundTruth reference_truth(ReferenceDesign design, std::uint64_t seed = 1);

std::string truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const std::string& text);

/// Truth plus labels, latent shares and utilities, for recovery scoring.
std::string sidecar_to_json(const GroundTruth& truth, const SyntheticSample& sample);
struct Sidecar {
  GroundTruth truth;
  std::vector<int> labels;
};
Sidecar sidecar_from_json(const std::string& text);

/// Maximum-weight perfect matching of rows to columns (square matrix).
/// Returns, for every row, its column.
std::vector<int> optimal_assignment(const Mat& score);

struct ParameterRecovery {
  std::string name;
  double truth = 0.0;
  double median = 0.0;
  double low = 0.0;
  double high = 0.0;
  bool covered = false;
};

struct ElasticityRecovery {
  int cluster = 0;  // true cluster
  int good = 0;
  double truth = 0.0;
  double median = 0.0;
  double relative_error = 0.0;
};

struct RecoveryReport {
  std::vector<int> matching;  // true cluster -> chain cluster
  Mat confusion;              // true x chain counts of modal assignments
  double assignment_accuracy = 0.0;
  std::vector<ParameterRecovery> parameters;
  double coverage = 0.0;
  std::vector<ElasticityRecovery> own_price;
  double max_own_price_error = 0.0;
  Vec mean_occupancy;  // per chain cluster, share of observations
  bool occupancy_collapse = false;
};

/// Scores a chain against the truth that generated its data: label
/// matching on the confusion of modal assignments, 95% HPD coverage of
/// structural coefficients, and Marshallian own-price elasticities at `at`.
RecoveryReport recovery_report(const GroundTruth& truth, const Chain& chain, const std::vector<int>& labels,
                               const EvaluationPoint& at, double mass = kDefaultHpdMass);

std::string recovery_to_json(const RecoveryReport& report);

}  // namespace easimix
