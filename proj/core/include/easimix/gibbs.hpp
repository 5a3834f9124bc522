#pragma once

#include "easimix/easi.hpp"
#include "easimix/gram.hpp"
#include "easimix/random.hpp"
#include "easimix/types.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace easimix {

/// Conjugate prior. The first-stage covariance Sigma_uu is inverse-Wishart
/// with `nu_uu - s` degrees of freedom (the offset is part of the sampler's
/// conditional). Per cluster, Sigma_{ee.u} ~ IW(nu_j, scale_eps_j) and the
/// regression block Sigma_uu^{-1} Sigma_{ue} ~ MN(reg_mean_j, reg_row_cov_j,
/// Sigma_{ee.u}).
struct PriorHyperparams {
  std::vector<Vec> beta_mean;
  std::vector<Mat> beta_cov;
  Vec gamma_mean;
  Mat gamma_cov;
  Vec alpha;
  double nu_uu = 0.0;
  Mat scale_uu;
  std::vector<double> nu;
  std::vector<Mat> scale_eps;
  std::vector<Mat> reg_mean;
  std::vector<Mat> reg_row_cov;

  /// Zero means, `variance` * I coefficient covariances, alpha = 1/J,
  /// nu = s (M_p + 3), identity scales.
  static PriorHyperparams defaults(const Dimensions& dims, double variance = 1000.0);
  void validate(const Dimensions& dims) const;
  int clusters() const { return static_cast<int>(beta_mean.size()); }
};

/// Sigma_j = [[S_ee, S_eu], [S_ue, S_uu]] in the (eps, u) ordering.
Mat assemble_sigma(const Mat& sigma_uu, const Mat& sigma_ee_u, const Mat& regression);

struct SigmaFactors {
  Mat sigma_uu;
  Mat sigma_ee_u;  // S_ee - S_eu S_uu^{-1} S_ue
  Mat regression;  // S_uu^{-1} S_ue, d* x s
};
SigmaFactors factor_sigma(const Mat& sigma, int s);

struct SamplerState {
  std::vector<Vec> beta;
  Vec gamma;
  std::vector<Mat> sigma;   // (s + d*) square; the u block is shared
  std::vector<int> psi;     // cluster labels, 0-based
  Vec phi;
  std::vector<Vec> latent;  // S-vectors; empty in snapshots unless requested
  Vec y;                    // empty in snapshots unless requested

  int clusters() const { return static_cast<int>(beta.size()); }
  std::vector<int> counts() const;
};

struct ChainSettings {
  long sweeps = 15000;
  long burn_in = 5000;
  long thin = 10;
  std::uint64_t seed = 1;
  int threads = 1;
  int truncation_sweeps = 10;
  bool store_latent = false;

  long snapshot_count() const { return (sweeps - burn_in) / thin; }
  void validate() const;
};

struct Chain {
  Dimensions dims;
  ChainSettings settings;
  PriorHyperparams priors;
  int observations = 0;
  std::uint64_t data_hash = 0;
  std::vector<SamplerState> snapshots;
  std::vector<double> log_likelihood;  // one per sweep
  std::vector<int> occupancy;          // sweeps x J, row-major
  std::vector<std::string> notes;
};

struct GaussianConditional {
  Vec mean;
  Mat cov;
};

struct CovarianceConditional {
  double nu_uu = 0.0;
  Mat scale_uu;
  std::vector<double> nu;
  std::vector<Mat> scale;
  std::vector<Mat> reg_mean;
  std::vector<Mat> reg_row_cov;
};

/// Posterior hyperparameters used within one sweep.
struct SweepHyperparameters {
  std::vector<GaussianConditional> beta;
  GaussianConditional gamma;
  CovarianceConditional covariance;
  Vec dirichlet;
};

/// Regressors for the current implicit utilities, one row per observation.
struct SweepContext {
  Mat structural;   // [x', p*'], n x (n_x + d*)
  Mat first_stage;  // [x', z'], n x (n_x + ell)
  Mat p_star;       // n x d*
  Mat latent;       // modeled latent shares, n x s
};

/// Order-independent hash of the numeric content of a dataset.
std::uint64_t dataset_hash(const Dataset& data);

class GibbsSampler {
public:
  GibbsSampler(const Dataset& data, PriorHyperparams priors, ChainSettings settings);

  const Dimensions& dims() const { return dims_; }
  const PriorHyperparams& priors() const { return priors_; }
  const ChainSettings& settings() const { return settings_; }
  const std::vector<std::string>& notes() const { return notes_; }

  /// k-means labels on observed shares, latent shares at their initial
  /// values, Stone-index utilities, identity covariances, then one warm pass
  /// of coefficient and covariance draws.
  SamplerState initial_state() const;

  /// One full sweep: utilities, latent shares, beta_j, gamma, covariances,
  /// labels and weights. Returns the audit log-likelihood. When `record` is
  /// set, the conditional hyperparameters used are copied into it.
  double sweep(SamplerState& state, long index, SweepHyperparameters* record = nullptr) const;

  Chain run() const;

  // Individual conditionals, exposed for testing and tools.
  void refresh_utility(SamplerState& state) const;
  SweepContext context(const SamplerState& state) const;
  GaussianConditional beta_conditional(const SamplerState& state, const SweepContext& ctx, int j) const;
  GaussianConditional gamma_conditional(const SamplerState& state, const SweepContext& ctx) const;
  CovarianceConditional covariance_conditional(const SamplerState& state, const SweepContext& ctx) const;
  Vec draw_beta_cluster(const SamplerState& state, const SweepContext& ctx, int j, StreamRng& rng,
                        GaussianConditional* record = nullptr) const;
  Vec draw_gamma(const SamplerState& state, const SweepContext& ctx, StreamRng& rng,
                 GaussianConditional* record = nullptr) const;
  void draw_covariances(SamplerState& state, const SweepContext& ctx, StreamRng& rng,
                        CovarianceConditional* record = nullptr) const;
  void draw_latent_shares(SamplerState& state, SweepContext& ctx, long index) const;
  /// Draws labels given the new parameters, then phi from Dirichlet(alpha +
  /// counts). Returns the log-likelihood of the mixture at the parameters.
  double draw_assignments_and_weights(SamplerState& state, const SweepContext& ctx, long index,
                                      Vec* dirichlet = nullptr) const;

  /// Structural residuals w* - F beta_j for every observation (n x s).
  Mat structural_residuals(const SweepContext& ctx, const Vec& beta) const;
  /// First-stage residuals p* - G gamma (n x d*).
  Mat first_stage_residuals(const SweepContext& ctx, const Vec& gamma) const;

private:
  struct LatentConditional {
    std::vector<int> censored;
    std::vector<int> positive;
    Mat gain;       // |censored| x (|positive| + d*)
    Mat precision;  // conditional precision of the censored block
  };

  std::vector<int> members(const SamplerState& state, int j) const;
  LatentConditional latent_conditional(const Mat& sigma, std::uint64_t mask) const;
  void check_identification();

  const Dataset& data_;
  Dimensions dims_;
  PriorHyperparams priors_;
  ChainSettings settings_;
  KroneckerLayout beta_layout_;
  KroneckerLayout gamma_layout_;
  std::vector<Mat> beta_prior_precision_;
  std::vector<Vec> beta_prior_rhs_;
  Mat gamma_prior_precision_;
  Vec gamma_prior_rhs_;
  std::vector<Mat> reg_prior_precision_;
  std::vector<std::uint64_t> censor_mask_;
  std::vector<std::string> notes_;
};

/// Validates inputs, runs the sampler and returns the thinned chain.
Chain run_chain(const Dataset& data, const PriorHyperparams& priors, const ChainSettings& settings);

}  // namespace easimix
