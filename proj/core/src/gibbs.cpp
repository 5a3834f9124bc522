#include "easimix/gibbs.hpp"

#include "easimix/linalg.hpp"
#include "easimix/truncated_normal.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <string>
#include <thread>

namespace easimix {

namespace {

enum Stage : std::uint64_t {
  kInit = 1,
  kLatent = 2,
  kBeta = 3,
  kGamma = 4,
  kSigma = 5,
  kAssign = 6,
  kWeights = 7,
  kCluster = 8,
};

template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2 * threads) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int begin = t * chunk;
    const int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, &errors, t, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Mat gather_rows(const Mat& m, const std::vector<int>& idx) {
  Mat out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(idx[k]);
  return out;
}

Vec draw_gaussian(const GaussianConditional& c, StreamRng& rng, std::string_view what) {
  return sample::mvn_chol(c.mean, linalg::robust_cholesky(c.cov, what), rng);
}

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t k = 0; k < len; ++k) {
    h ^= p[k];
    h *= 0x100000001b3ULL;
  }
}

void fnv_vec(std::uint64_t& h, const Vec& v) {
  const auto n = static_cast<std::uint64_t>(v.size());
  fnv_bytes(h, &n, sizeof n);
  if (n > 0) fnv_bytes(h, v.data(), sizeof(double) * v.size());
}

}  // namespace

PriorHyperparams PriorHyperparams::defaults(const Dimensions& dims, double variance) {
  dims.validate();
  const int J = dims.clusters;
  const int s = dims.modeled();
  const int ds = dims.endogenous();
  PriorHyperparams p;
  p.beta_mean.assign(J, Vec::Zero(dims.beta_dim()));
  p.beta_cov.assign(J, variance * Mat::Identity(dims.beta_dim(), dims.beta_dim()));
  p.gamma_mean = Vec::Zero(dims.gamma_dim());
  p.gamma_cov = variance * Mat::Identity(dims.gamma_dim(), dims.gamma_dim());
  p.alpha = Vec::Constant(J, 1.0 / J);
  const double nu = static_cast<double>(s * (dims.price_covariates + 3));
  p.nu_uu = nu;
  p.scale_uu = Mat::Identity(ds, ds);
  p.nu.assign(J, nu);
  p.scale_eps.assign(J, Mat::Identity(s, s));
  p.reg_mean.assign(J, Mat::Zero(ds, s));
  p.reg_row_cov.assign(J, Mat::Identity(ds, ds));
  return p;
}

void PriorHyperparams::validate(const Dimensions& dims) const {
  const int J = dims.clusters;
  const int s = dims.modeled();
  const int ds = dims.endogenous();
  auto fail = [](const std::string& what) { throw DimensionError("prior: " + what); };
  auto spd = [&](const Mat& m, Eigen::Index k, const std::string& what) {
    if (m.rows() != k || m.cols() != k) fail(what + " has the wrong shape");
    if (!linalg::is_symmetric(m) || !linalg::is_positive_definite(m))
      throw NumericalError("prior: " + what + " is not symmetric positive definite");
  };
  if (static_cast<int>(beta_mean.size()) != J || static_cast<int>(beta_cov.size()) != J ||
      static_cast<int>(nu.size()) != J || static_cast<int>(scale_eps.size()) != J ||
      static_cast<int>(reg_mean.size()) != J || static_cast<int>(reg_row_cov.size()) != J)
    fail("per-cluster blocks do not match the cluster count");
  for (int j = 0; j < J; ++j) {
    if (beta_mean[j].size() != dims.beta_dim()) fail("beta mean length");
    spd(beta_cov[j], dims.beta_dim(), "beta covariance");
    spd(scale_eps[j], s, "structural scale");
    spd(reg_row_cov[j], ds, "regression row covariance");
    if (reg_mean[j].rows() != ds || reg_mean[j].cols() != s) fail("regression mean shape");
    if (!(nu[j] > s - 1)) fail("structural degrees of freedom must exceed s - 1");
  }
  if (gamma_mean.size() != dims.gamma_dim()) fail("gamma mean length");
  spd(gamma_cov, dims.gamma_dim(), "gamma covariance");
  spd(scale_uu, ds, "first-stage scale");
  if (!(nu_uu - s > ds - 1)) fail("first-stage degrees of freedom must exceed s + d* - 1");
  if (alpha.size() != J || (alpha.array() <= 0.0).any()) fail("Dirichlet parameters must be positive");
}

Mat assemble_sigma(const Mat& sigma_uu, const Mat& sigma_ee_u, const Mat& regression) {
  const Eigen::Index s = sigma_ee_u.rows();
  const Eigen::Index ds = sigma_uu.rows();
  Mat out(s + ds, s + ds);
  const Mat ue = sigma_uu * regression;
  out.topLeftCorner(s, s) = linalg::symmetrize(sigma_ee_u + regression.transpose() * ue);
  out.topRightCorner(s, ds) = ue.transpose();
  out.bottomLeftCorner(ds, s) = ue;
  out.bottomRightCorner(ds, ds) = sigma_uu;
  return out;
}

SigmaFactors factor_sigma(const Mat& sigma, int s) {
  const Eigen::Index ds = sigma.rows() - s;
  SigmaFactors f;
  f.sigma_uu = sigma.bottomRightCorner(ds, ds);
  const Mat ue = sigma.bottomLeftCorner(ds, s);
  if (ds > 0) {
    const Mat l = linalg::robust_cholesky(f.sigma_uu, "Sigma_uu");
    const auto tri = l.triangularView<Eigen::Lower>();
    f.regression = tri.transpose().solve(tri.solve(ue));
  } else {
    f.regression = Mat::Zero(0, s);
  }
  f.sigma_ee_u = linalg::symmetrize(sigma.topLeftCorner(s, s) - ue.transpose() * f.regression);
  return f;
}

std::vector<int> SamplerState::counts() const {
  std::vector<int> c(beta.size(), 0);
  for (int label : psi) ++c[label];
  return c;
}

void ChainSettings::validate() const {
  if (burn_in < 0) throw Error("settings: burn-in must be non-negative");
  if (sweeps <= burn_in) throw Error("settings: sweeps must exceed burn-in");
  if (thin < 1) throw Error("settings: thinning must be at least 1");
  if (threads < 1) throw Error("settings: threads must be at least 1");
  if (truncation_sweeps < 1) throw Error("settings: truncation sweeps must be at least 1");
}

std::uint64_t dataset_hash(const Dataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto n = static_cast<std::uint64_t>(data.observations.size());
  fnv_bytes(h, &n, sizeof n);
  for (const auto& o : data.observations) {
    fnv_vec(h, o.shares);
    fnv_vec(h, o.log_prices);
    fnv_bytes(h, &o.log_expenditure, sizeof(double));
    fnv_vec(h, o.h);
    fnv_vec(h, o.h_p);
    fnv_vec(h, o.h_y);
    fnv_vec(h, o.z);
    fnv_bytes(h, &o.weight, sizeof(double));
  }
  return h;
}

GibbsSampler::GibbsSampler(const Dataset& data, PriorHyperparams priors, ChainSettings settings)
    : data_(data), dims_(data.dims), priors_(std::move(priors)), settings_(settings) {
  dims_.validate();
  priors_.validate(dims_);
  settings_.validate();
  if (dims_.modeled() > 63) throw DimensionError("at most 64 goods are supported");
  for (const auto& o : data_.observations) check_observation(o, dims_);

  beta_layout_ = KroneckerLayout::for_beta(dims_);
  gamma_layout_ = KroneckerLayout::for_gamma(dims_);
  for (int j = 0; j < dims_.clusters; ++j) {
    beta_prior_precision_.push_back(linalg::spd_inverse(priors_.beta_cov[j], "beta prior"));
    beta_prior_rhs_.push_back(beta_prior_precision_.back() * priors_.beta_mean[j]);
    reg_prior_precision_.push_back(linalg::spd_inverse(priors_.reg_row_cov[j], "regression prior"));
  }
  gamma_prior_precision_ = linalg::spd_inverse(priors_.gamma_cov, "gamma prior");
  gamma_prior_rhs_ = gamma_prior_precision_ * priors_.gamma_mean;

  const int s = dims_.modeled();
  censor_mask_.reserve(data_.observations.size());
  for (const auto& o : data_.observations) {
    std::uint64_t mask = 0;
    for (int l = 0; l < s; ++l)
      if (!(o.shares(l) > 0.0)) mask |= (std::uint64_t{1} << l);
    censor_mask_.push_back(mask);
  }
  check_identification();
}

void GibbsSampler::check_identification() {
  const int n = data_.size();
  if (n == 0) {
    notes_.push_back("no observations: every conditional equals its prior");
    return;
  }
  if (dims_.instruments < dims_.endogenous())
    notes_.push_back("order condition fails: " + std::to_string(dims_.instruments) +
                     " instruments for " + std::to_string(dims_.endogenous()) +
                     " endogenous regressors; first stage identified by the prior");
  SamplerState probe;
  probe.y.resize(n);
  probe.latent.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& o = data_.observations[i];
    probe.y(i) = o.log_expenditure - o.log_prices.dot(o.shares);
    probe.latent[i] = o.latent;
  }
  const SweepContext ctx = context(probe);
  auto rank_of = [](const Mat& m) {
    Eigen::ColPivHouseholderQR<Mat> qr(m);
    qr.setThreshold(1e-10);
    return static_cast<int>(qr.rank());
  };
  const int rs = rank_of(ctx.structural);
  if (rs < ctx.structural.cols())
    notes_.push_back("structural regressors are collinear (rank " + std::to_string(rs) + " of " +
                     std::to_string(ctx.structural.cols()) +
                     "); some coefficients are identified by the prior only");
  const int rf = rank_of(ctx.first_stage);
  if (rf < ctx.first_stage.cols())
    notes_.push_back("first-stage regressors are collinear (rank " + std::to_string(rf) + " of " +
                     std::to_string(ctx.first_stage.cols()) + ")");
  const Mat centered = ctx.latent.rowwise() - ctx.latent.colwise().mean();
  if (centered.cwiseAbs().maxCoeff() == 0.0)
    notes_.push_back("shares have zero variance; error covariances are identified by the prior only");
}

std::vector<int> GibbsSampler::members(const SamplerState& state, int j) const {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(state.psi.size()); ++i)
    if (state.psi[i] == j) idx.push_back(i);
  return idx;
}

void GibbsSampler::refresh_utility(SamplerState& state) const {
  const int n = data_.size();
  std::vector<FullCoefficients> full;
  for (const auto& b : state.beta) full.push_back(complete_system(unpack(b, dims_), dims_));
  state.y.resize(n);
  for (int i = 0; i < n; ++i) state.y(i) = implicit_utility(data_.observations[i], full[state.psi[i]]);
}

SweepContext GibbsSampler::context(const SamplerState& state) const {
  const int n = data_.size();
  const int nx = dims_.exogenous();
  const int ds = dims_.endogenous();
  const int s = dims_.modeled();
  SweepContext ctx;
  ctx.structural.resize(n, dims_.structural_rows());
  ctx.first_stage.resize(n, dims_.first_stage_rows());
  ctx.p_star.resize(n, ds);
  ctx.latent.resize(n, s);
  for (int i = 0; i < n; ++i) {
    const auto& o = data_.observations[i];
    const double y = state.y(i);
    if (!std::isfinite(y)) throw NumericalError("non-finite implicit utility at observation " + std::to_string(i));
    const Vec x = exogenous_vector(y, o.h, o.h_y, dims_);
    const Vec p_star = endogenous_vector(o.rel_log_prices, y, o.h_p, dims_);
    ctx.structural.row(i).head(nx) = x.transpose();
    ctx.structural.row(i).tail(ds) = p_star.transpose();
    ctx.first_stage.row(i).head(nx) = x.transpose();
    ctx.first_stage.row(i).tail(dims_.instruments) = o.z.transpose();
    ctx.p_star.row(i) = p_star.transpose();
    ctx.latent.row(i) = state.latent[i].head(s).transpose();
  }
  return ctx;
}

Mat GibbsSampler::structural_residuals(const SweepContext& ctx, const Vec& beta) const {
  return ctx.latent - ctx.structural * beta_layout_.to_check(beta);
}

Mat GibbsSampler::first_stage_residuals(const SweepContext& ctx, const Vec& gamma) const {
  return ctx.p_star - ctx.first_stage * gamma_layout_.to_check(gamma);
}

GaussianConditional GibbsSampler::beta_conditional(const SamplerState& state, const SweepContext& ctx,
                                                   int j) const {
  const std::vector<int> idx = members(state, j);
  if (idx.empty()) return {priors_.beta_mean[j], priors_.beta_cov[j]};

  const SigmaFactors fac = factor_sigma(state.sigma[j], dims_.modeled());
  const Mat weight = linalg::symmetrize(linalg::spd_inverse(fac.sigma_ee_u, "Sigma_ee.u"));
  const Mat rows = gather_rows(ctx.structural, idx);
  const Mat u_hat = gather_rows(first_stage_residuals(ctx, state.gamma), idx);
  const Mat targets = gather_rows(ctx.latent, idx) - u_hat * fac.regression;
  const GramResult g = weighted_gram(rows, targets, weight, beta_layout_);

  GaussianConditional c;
  c.cov = linalg::symmetrize(linalg::spd_inverse(beta_prior_precision_[j] + g.matrix, "beta posterior precision"));
  c.mean = c.cov * (beta_prior_rhs_[j] + g.vector);
  return c;
}

GaussianConditional GibbsSampler::gamma_conditional(const SamplerState& state,
                                                    const SweepContext& ctx) const {
  const int s = dims_.modeled();
  const int ds = dims_.endogenous();
  Mat precision = gamma_prior_precision_;
  Vec rhs = gamma_prior_rhs_;
  bool any = false;
  for (int j = 0; j < state.clusters(); ++j) {
    const std::vector<int> idx = members(state, j);
    if (idx.empty()) continue;
    any = true;
    const Mat& sigma = state.sigma[j];
    const Mat see = sigma.topLeftCorner(s, s);
    const Mat seu = sigma.topRightCorner(s, ds);
    const Mat correction = linalg::spd_inverse(see, "Sigma_ee") * seu;  // s x d*
    const Mat suu_e = linalg::symmetrize(sigma.bottomRightCorner(ds, ds) - seu.transpose() * correction);
    const Mat weight = linalg::symmetrize(linalg::spd_inverse(suu_e, "Sigma_uu.e"));
    const Mat e_hat = gather_rows(structural_residuals(ctx, state.beta[j]), idx);
    const Mat targets = gather_rows(ctx.p_star, idx) - e_hat * correction;
    const GramResult g = weighted_gram(gather_rows(ctx.first_stage, idx), targets, weight, gamma_layout_);
    precision += g.matrix;
    rhs += g.vector;
  }
  if (!any) return {priors_.gamma_mean, priors_.gamma_cov};
  GaussianConditional c;
  c.cov = linalg::symmetrize(linalg::spd_inverse(precision, "gamma posterior precision"));
  c.mean = c.cov * rhs;
  return c;
}

CovarianceConditional GibbsSampler::covariance_conditional(const SamplerState& state,
                                                           const SweepContext& ctx) const {
  const int n = data_.size();
  const int s = dims_.modeled();
  const int J = state.clusters();
  CovarianceConditional c;
  const Mat u_all = first_stage_residuals(ctx, state.gamma);
  c.nu_uu = priors_.nu_uu - s + n;
  c.scale_uu = n == 0 ? priors_.scale_uu : linalg::symmetrize(priors_.scale_uu + u_all.transpose() * u_all);

  for (int j = 0; j < J; ++j) {
    const std::vector<int> idx = members(state, j);
    if (idx.empty()) {
      c.nu.push_back(priors_.nu[j]);
      c.scale.push_back(priors_.scale_eps[j]);
      c.reg_mean.push_back(priors_.reg_mean[j]);
      c.reg_row_cov.push_back(priors_.reg_row_cov[j]);
      continue;
    }
    const Mat u = gather_rows(u_all, idx);
    const Mat e = gather_rows(structural_residuals(ctx, state.beta[j]), idx);
    const Mat& p0 = reg_prior_precision_[j];
    const Mat& m0 = priors_.reg_mean[j];
    const Mat post_precision = linalg::symmetrize(p0 + u.transpose() * u);
    const Mat row_cov = linalg::symmetrize(linalg::spd_inverse(post_precision, "regression posterior"));
    const Mat mean = row_cov * (p0 * m0 + u.transpose() * e);
    // R + E'E + M0' P0 M0 - M' P M, written as a sum of PSD terms.
    const Mat resid = e - u * mean;
    const Mat shift = mean - m0;
    c.nu.push_back(priors_.nu[j] + static_cast<double>(idx.size()));
    c.scale.push_back(linalg::symmetrize(priors_.scale_eps[j] + resid.transpose() * resid +
                                         shift.transpose() * p0 * shift));
    c.reg_mean.push_back(mean);
    c.reg_row_cov.push_back(row_cov);
  }
  return c;
}

Vec GibbsSampler::draw_beta_cluster(const SamplerState& state, const SweepContext& ctx, int j,
                                    StreamRng& rng, GaussianConditional* record) const {
  GaussianConditional c = beta_conditional(state, ctx, j);
  Vec draw = draw_gaussian(c, rng, "beta posterior covariance");
  if (record) *record = std::move(c);
  return draw;
}

Vec GibbsSampler::draw_gamma(const SamplerState& state, const SweepContext& ctx, StreamRng& rng,
                             GaussianConditional* record) const {
  GaussianConditional c = gamma_conditional(state, ctx);
  Vec draw = draw_gaussian(c, rng, "gamma posterior covariance");
  if (record) *record = std::move(c);
  return draw;
}

void GibbsSampler::draw_covariances(SamplerState& state, const SweepContext& ctx, StreamRng& rng,
                                    CovarianceConditional* record) const {
  CovarianceConditional c = covariance_conditional(state, ctx);
  const Mat sigma_uu = sample::inverse_wishart(c.nu_uu, c.scale_uu, rng);
  for (int j = 0; j < state.clusters(); ++j) {
    const Mat see_u = sample::inverse_wishart(c.nu[j], c.scale[j], rng);
    const Mat reg = sample::matrix_normal(c.reg_mean[j], c.reg_row_cov[j], see_u, rng);
    state.sigma[j] = assemble_sigma(sigma_uu, see_u, reg);
  }
  if (record) *record = std::move(c);
}

GibbsSampler::LatentConditional GibbsSampler::latent_conditional(const Mat& sigma,
                                                                 std::uint64_t mask) const {
  const int s = dims_.modeled();
  const int ds = dims_.endogenous();
  LatentConditional lc;
  for (int l = 0; l < s; ++l) ((mask >> l) & 1U ? lc.censored : lc.positive).push_back(l);
  std::vector<int> tau = lc.positive;
  for (int k = 0; k < ds; ++k) tau.push_back(s + k);
  const auto nc = static_cast<Eigen::Index>(lc.censored.size());
  const auto nt = static_cast<Eigen::Index>(tau.size());
  Mat s_cc(nc, nc), s_ct(nc, nt), s_tt(nt, nt);
  for (Eigen::Index a = 0; a < nc; ++a) {
    for (Eigen::Index b = 0; b < nc; ++b) s_cc(a, b) = sigma(lc.censored[a], lc.censored[b]);
    for (Eigen::Index b = 0; b < nt; ++b) s_ct(a, b) = sigma(lc.censored[a], tau[b]);
  }
  for (Eigen::Index a = 0; a < nt; ++a)
    for (Eigen::Index b = 0; b < nt; ++b) s_tt(a, b) = sigma(tau[a], tau[b]);
  if (nt > 0) {
    lc.gain = s_ct * linalg::spd_inverse(s_tt, "latent conditioning block");
    s_cc -= lc.gain * s_ct.transpose();
  } else {
    lc.gain = Mat::Zero(nc, 0);
  }
  lc.precision = linalg::symmetrize(linalg::spd_inverse(linalg::symmetrize(s_cc), "latent conditional covariance"));
  return lc;
}

void GibbsSampler::draw_latent_shares(SamplerState& state, SweepContext& ctx, long index) const {
  const int n = data_.size();
  const int J = state.clusters();
  const int goods = dims_.goods;
  std::vector<Mat> check;
  for (int j = 0; j < J; ++j) check.push_back(beta_layout_.to_check(state.beta[j]));
  const Mat u_all = first_stage_residuals(ctx, state.gamma);

  std::vector<std::unordered_map<std::uint64_t, LatentConditional>> cache(J);
  for (int i = 0; i < n; ++i) {
    const std::uint64_t mask = censor_mask_[i];
    if (mask == 0) continue;
    auto& m = cache[state.psi[i]];
    if (!m.count(mask)) m.emplace(mask, latent_conditional(state.sigma[state.psi[i]], mask));
  }

  parallel_for(n, settings_.threads, [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      const std::uint64_t mask = censor_mask_[i];
      if (mask == 0) continue;
      const int j = state.psi[i];
      const LatentConditional& lc = cache[j].at(mask);
      const auto& obs = data_.observations[i];
      const Vec mean = check[j].transpose() * ctx.structural.row(i).transpose();
      const auto np = static_cast<Eigen::Index>(lc.positive.size());
      Vec tau(np + u_all.cols());
      for (Eigen::Index a = 0; a < np; ++a) tau(a) = obs.shares(lc.positive[a]) - mean(lc.positive[a]);
      tau.tail(u_all.cols()) = u_all.row(i).transpose();
      const auto nc = static_cast<Eigen::Index>(lc.censored.size());
      Vec mu(nc), start(nc);
      for (Eigen::Index a = 0; a < nc; ++a) {
        mu(a) = mean(lc.censored[a]);
        start(a) = state.latent[i](lc.censored[a]);
      }
      if (np + u_all.cols() > 0) mu += lc.gain * tau;
      StreamRng rng(settings_.seed, static_cast<std::uint64_t>(index), kLatent, static_cast<std::uint64_t>(i));
      const Vec draw = sample_truncated_mvn_precision(mu, lc.precision, rng, settings_.truncation_sweeps, start);

      Vec& latent = state.latent[i];
      const double censored_mass = draw.sum();
      for (Eigen::Index a = 0; a < nc; ++a) latent(lc.censored[a]) = draw(a);
      for (int l = 0; l < goods; ++l)
        if (obs.shares(l) > 0.0) latent(l) = (1.0 - censored_mass) * obs.shares(l);
        else if (l == goods - 1) latent(l) = 0.0;
      ctx.latent.row(i) = latent.head(dims_.modeled()).transpose();
    }
  });
}

double GibbsSampler::draw_assignments_and_weights(SamplerState& state, const SweepContext& ctx,
                                                  long index, Vec* dirichlet) const {
  const int n = data_.size();
  const int J = state.clusters();
  const int dim = dims_.error_dim();
  const int s = dims_.modeled();
  std::vector<Mat> check, precision;
  Vec log_det(J), log_phi(J);
  for (int j = 0; j < J; ++j) {
    check.push_back(beta_layout_.to_check(state.beta[j]));
    const Mat l = linalg::robust_cholesky(state.sigma[j], "cluster covariance");
    log_det(j) = linalg::log_det_from_cholesky(l);
    const Mat linv = l.triangularView<Eigen::Lower>().solve(Mat::Identity(dim, dim));
    precision.push_back(linv.transpose() * linv);
    log_phi(j) = std::log(state.phi(j));
  }
  const Mat u_all = first_stage_residuals(ctx, state.gamma);
  std::vector<double> loglik(n, 0.0);
  const double constant = -0.5 * dim * std::log(2.0 * std::numbers::pi);

  parallel_for(n, settings_.threads, [&](int begin, int end) {
    Vec r(dim), lw(J);
    for (int i = begin; i < end; ++i) {
      r.tail(dim - s) = u_all.row(i).transpose();
      for (int j = 0; j < J; ++j) {
        r.head(s) = ctx.latent.row(i).transpose() - check[j].transpose() * ctx.structural.row(i).transpose();
        lw(j) = log_phi(j) - 0.5 * log_det(j) - 0.5 * r.dot(precision[j] * r);
      }
      const double top = lw.maxCoeff();
      if (!std::isfinite(top))
        throw NumericalError("non-finite mixture density at observation " + std::to_string(i));
      loglik[i] = top + std::log((lw.array() - top).exp().sum()) + constant;
      if (J == 1) {
        state.psi[i] = 0;
        continue;
      }
      StreamRng rng(settings_.seed, static_cast<std::uint64_t>(index), kAssign, static_cast<std::uint64_t>(i));
      state.psi[i] = sample::categorical_log(lw, rng);
    }
  });

  Vec post = priors_.alpha;
  for (int label : state.psi) post(label) += 1.0;
  StreamRng rng(settings_.seed, static_cast<std::uint64_t>(index), kWeights, 0);
  state.phi = sample::dirichlet(post, rng);
  if (dirichlet) *dirichlet = post;
  double total = 0.0;
  for (double v : loglik) total += v;
  return total;
}

SamplerState GibbsSampler::initial_state() const {
  const int n = data_.size();
  const int J = dims_.clusters;
  const int s = dims_.modeled();
  const int ds = dims_.endogenous();
  SamplerState state;
  state.beta = priors_.beta_mean;
  state.gamma = priors_.gamma_mean;
  state.sigma.assign(J, Mat::Identity(s + ds, s + ds));
  state.psi.assign(n, 0);
  state.y.resize(n);
  state.latent.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& o = data_.observations[i];
    state.latent[i] = o.latent;
    state.y(i) = o.log_expenditure - o.log_prices.dot(o.shares);
  }

  if (J > 1 && n >= J) {
    // k-means++ on the modeled observed shares.
    Mat pts(n, s);
    for (int i = 0; i < n; ++i) pts.row(i) = data_.observations[i].shares.head(s).transpose();
    StreamRng rng(settings_.seed, 0, kCluster, 0);
    Mat centers(J, s);
    centers.row(0) = pts.row(static_cast<int>(rng.uniform() * n) % n);
    Vec d2 = Vec::Constant(n, std::numeric_limits<double>::infinity());
    for (int c = 1; c < J; ++c) {
      for (int i = 0; i < n; ++i) d2(i) = std::min(d2(i), (pts.row(i) - centers.row(c - 1)).squaredNorm());
      const double total = d2.sum();
      int pick = 0;
      if (total > 0.0) {
        double u = rng.uniform() * total, cum = 0.0;
        for (pick = 0; pick < n - 1; ++pick) {
          cum += d2(pick);
          if (u < cum) break;
        }
      }
      centers.row(c) = pts.row(pick);
    }
    for (int iter = 0; iter < 50; ++iter) {
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < J; ++c) {
          const double d = (pts.row(i) - centers.row(c)).squaredNorm();
          if (d < best_d) {
            best_d = d;
            best = c;
          }
        }
        changed = changed || state.psi[i] != best;
        state.psi[i] = best;
      }
      Mat sums = Mat::Zero(J, s);
      Vec cnt = Vec::Zero(J);
      for (int i = 0; i < n; ++i) {
        sums.row(state.psi[i]) += pts.row(i);
        cnt(state.psi[i]) += 1.0;
      }
      for (int c = 0; c < J; ++c)
        if (cnt(c) > 0) centers.row(c) = sums.row(c) / cnt(c);
      if (!changed && iter > 0) break;
    }
  } else if (J > 1) {
    for (int i = 0; i < n; ++i) state.psi[i] = i % J;
  }

  state.phi = Vec::Constant(J, 1.0 / J);
  if (n > 0) {
    Vec cnt = Vec::Constant(J, 0.0);
    for (int label : state.psi) cnt(label) += 1.0;
    state.phi = (cnt.array() + priors_.alpha.array()) / (n + priors_.alpha.sum());
  }

  const SweepContext ctx = context(state);
  StreamRng rng_gamma(settings_.seed, 0, kInit, 0);
  state.gamma = draw_gamma(state, ctx, rng_gamma);
  for (int j = 0; j < J; ++j) {
    StreamRng rng(settings_.seed, 0, kInit, 1 + static_cast<std::uint64_t>(j));
    state.beta[j] = draw_beta_cluster(state, ctx, j, rng);
  }
  StreamRng rng_sigma(settings_.seed, 0, kInit, 1 + static_cast<std::uint64_t>(J));
  draw_covariances(state, ctx, rng_sigma);
  return state;
}

double GibbsSampler::sweep(SamplerState& state, long index, SweepHyperparameters* record) const {
  try {
    refresh_utility(state);
    SweepContext ctx = context(state);
    draw_latent_shares(state, ctx, index);
    const auto t = static_cast<std::uint64_t>(index);
    if (record) record->beta.resize(state.clusters());
    for (int j = 0; j < state.clusters(); ++j) {
      StreamRng rng(settings_.seed, t, kBeta, static_cast<std::uint64_t>(j));
      state.beta[j] = draw_beta_cluster(state, ctx, j, rng, record ? &record->beta[j] : nullptr);
    }
    StreamRng rng_gamma(settings_.seed, t, kGamma, 0);
    state.gamma = draw_gamma(state, ctx, rng_gamma, record ? &record->gamma : nullptr);
    StreamRng rng_sigma(settings_.seed, t, kSigma, 0);
    draw_covariances(state, ctx, rng_sigma, record ? &record->covariance : nullptr);
    return draw_assignments_and_weights(state, ctx, index, record ? &record->dirichlet : nullptr);
  } catch (const NumericalError& e) {
    throw NumericalError("sweep " + std::to_string(index) + ": " + e.what());
  }
}

Chain GibbsSampler::run() const {
  Chain chain;
  chain.dims = dims_;
  chain.settings = settings_;
  chain.priors = priors_;
  chain.observations = data_.size();
  chain.data_hash = dataset_hash(data_);
  chain.notes = notes_;
  chain.log_likelihood.reserve(settings_.sweeps);
  chain.occupancy.reserve(static_cast<std::size_t>(settings_.sweeps) * dims_.clusters);
  chain.snapshots.reserve(settings_.snapshot_count());

  SamplerState state = initial_state();
  for (long t = 1; t <= settings_.sweeps; ++t) {
    chain.log_likelihood.push_back(sweep(state, t));
    for (int c : state.counts()) chain.occupancy.push_back(c);
    if (t > settings_.burn_in && (t - settings_.burn_in) % settings_.thin == 0) {
      for (int j = 0; j < state.clusters(); ++j)
        if (!linalg::is_positive_definite(state.sigma[j]))
          throw NumericalError("sweep " + std::to_string(t) + ": retained covariance is not positive definite");
      SamplerState snap;
      snap.beta = state.beta;
      snap.gamma = state.gamma;
      snap.sigma = state.sigma;
      snap.psi = state.psi;
      snap.phi = state.phi;
      if (settings_.store_latent) {
        snap.latent = state.latent;
        snap.y = state.y;
      }
      chain.snapshots.push_back(std::move(snap));
    }
  }

  const int J = dims_.clusters;
  const long retained = settings_.sweeps - settings_.burn_in;
  for (int j = 0; j < J; ++j) {
    long occupied = 0;
    for (long t = settings_.burn_in; t < settings_.sweeps; ++t)
      if (chain.occupancy[static_cast<std::size_t>(t) * J + j] > 0) ++occupied;
    if (chain.observations > 0 && occupied == 0)
      chain.notes.push_back("cluster " + std::to_string(j + 1) + " is empty after burn-in");
    else if (chain.observations > 0 && occupied < retained)
      chain.notes.push_back("cluster " + std::to_string(j + 1) + " is empty in " +
                            std::to_string(retained - occupied) + " retained sweeps");
  }
  return chain;
}

Chain run_chain(const Dataset& data, const PriorHyperparams& priors, const ChainSettings& settings) {
  return GibbsSampler(data, priors, settings).run();
}

}  // namespace easimix
