#include "easimix/synthgen.hpp"

#include "easimix/gram.hpp"
#include "easimix/linalg.hpp"
#include "easimix/random.hpp"
#include "json_util.hpp"

#include <cmath>
#include <limits>

namespace easimix {

namespace {

constexpr std::uint64_t kGenerateStage = 11;
constexpr int kMaxFixedPoint = 200;
constexpr double kFixedPointTolerance = 1e-10;
constexpr double kCollapseShare = 0.02;

using detail::json;

Vec draw_covariates(const std::vector<bool>& binary, int width, StreamRng& rng) {
  Vec v(width);
  for (int c = 0; c < width; ++c) {
    const bool is_binary = c < static_cast<int>(binary.size()) && binary[c];
    v(c) = is_binary ? (rng.uniform() < 0.5 ? 1.0 : 0.0) : rng.normal();
  }
  return v;
}

json coeffs_to_json(const EasiCoefficients& c) {
  json b = json::array(), a = json::array();
  for (const auto& v : c.b) b.push_back(detail::to_json(v));
  for (const auto& m : c.A) a.push_back(detail::to_json(m));
  return json{{"b", b}, {"A", a}, {"B", detail::to_json(c.B)}, {"C", detail::to_json(c.C)}, {"D", detail::to_json(c.D)}};
}

EasiCoefficients coeffs_from_json(const json& j, const Dimensions& dims) {
  EasiCoefficients c;
  const int s = dims.modeled();
  for (const auto& v : j.at("b")) c.b.push_back(detail::vec_from(v, "truth b"));
  for (const auto& m : j.at("A")) c.A.push_back(detail::mat_from(m, "truth A"));
  c.B = detail::mat_from(j.at("B"), "truth B");
  c.C = j.contains("C") ? detail::mat_from(j.at("C"), "truth C") : Mat(s, 0);
  c.D = j.contains("D") ? detail::mat_from(j.at("D"), "truth D") : Mat(s, 0);
  if (c.C.size() == 0) c.C.resize(s, dims.demographics);
  if (c.D.size() == 0) c.D.resize(s, dims.utility_covariates);
  return c;
}

json flags_to_json(const std::vector<bool>& v) {
  json out = json::array();
  for (bool b : v) out.push_back(b);
  return out;
}

std::vector<bool> flags_from(const json& j, const char* key) {
  std::vector<bool> out;
  if (j.contains(key))
    for (const auto& b : j.at(key)) out.push_back(b.get<bool>());
  return out;
}

}  // namespace

void GroundTruth::validate() const {
  dims.validate();
  const int J = dims.clusters;
  const int err = dims.error_dim();
  if (static_cast<int>(coeffs.size()) != J || static_cast<int>(sigma.size()) != J)
    throw DimensionError("truth: one coefficient set and covariance per cluster expected");
  if (phi.size() != J || (phi.array() < 0.0).any() || std::abs(phi.sum() - 1.0) > 1e-12)
    throw DataError("truth: phi must lie on the simplex");
  if (gamma.size() != dims.gamma_dim()) throw DimensionError("truth: gamma length mismatch");
  if (!goods.empty() && static_cast<int>(goods.size()) != dims.goods) throw DimensionError("truth: goods list length");
  const int ds = dims.endogenous();
  for (int j = 0; j < J; ++j) {
    pack(coeffs[j], dims);  // throws on bad shapes or asymmetric blocks under symmetry
    if (sigma[j].rows() != err || sigma[j].cols() != err) throw DimensionError("truth: covariance shape");
    if (!linalg::is_symmetric(sigma[j]) || !linalg::is_positive_definite(sigma[j]))
      throw NumericalError("truth: covariance of cluster " + std::to_string(j + 1) + " is not positive definite");
    if (j > 0 && sigma[j].bottomRightCorner(ds, ds) != sigma[0].bottomRightCorner(ds, ds))
      throw DataError("truth: the first-stage covariance must be shared across clusters");
  }
}

SyntheticSample generate_population(const GroundTruth& truth, int n) {
  truth.validate();
  if (n < 0) throw Error("generate_population: negative sample size");
  const Dimensions& dims = truth.dims;
  const int s = dims.modeled();
  const int J = dims.clusters;
  const CovariateSpec& cov = truth.covariates;

  std::vector<FullCoefficients> full;
  std::vector<Mat> chol;
  for (int j = 0; j < J; ++j) {
    full.push_back(complete_system(truth.coeffs[j], dims));
    chol.push_back(linalg::robust_cholesky(truth.sigma[j].topLeftCorner(2 * s, 2 * s), "truth covariance"));
  }
  const Mat first_stage = KroneckerLayout::for_gamma(dims).to_check(truth.gamma);
  const Vec log_phi = truth.phi.array().log();

  SyntheticSample out;
  out.data.dims = dims;
  out.data.goods = truth.goods;
  if (out.data.goods.empty())
    for (int l = 0; l < dims.goods; ++l) out.data.goods.push_back("good" + std::to_string(l + 1));
  out.y.resize(n);
  int censored = 0;
  for (int i = 0; i < n; ++i) {
    StreamRng rng(truth.seed, 0, kGenerateStage, static_cast<std::uint64_t>(i));
    const int j = J == 1 ? 0 : sample::categorical_log(log_phi, rng);
    const Vec h = draw_covariates(cov.h_binary, dims.demographics, rng);
    const Vec h_p = draw_covariates(cov.h_p_binary, dims.price_covariates, rng);
    const Vec h_y = draw_covariates(cov.h_y_binary, dims.utility_covariates, rng);
    Vec z(dims.instruments);
    for (int k = 0; k < dims.instruments; ++k) z(k) = cov.instrument_sd * rng.normal();
    const double e = cov.log_expenditure_mean + cov.log_expenditure_sd * rng.normal();
    const double base_price = cov.base_log_price_mean + cov.base_log_price_sd * rng.normal();
    const Vec noise = sample::mvn_chol(Vec::Zero(2 * s), chol[j], rng);
    const Vec eps = noise.head(s);
    const Vec u_p = noise.tail(s);

    double y = e;
    Vec log_prices(dims.goods), latent(dims.goods), shares;
    bool converged = false;
    for (int it = 0; it < kMaxFixedPoint; ++it) {
      Vec g(dims.first_stage_rows());
      g.head(dims.exogenous()) = exogenous_vector(y, h, h_y, dims);
      g.tail(dims.instruments) = z;
      const Vec p = first_stage.leftCols(s).transpose() * g + u_p;
      log_prices.head(s) = p.array() + base_price;
      log_prices(s) = base_price;
      latent = predicted_shares(full[j], log_prices, y, h, h_p, h_y);
      latent.head(s) += eps;
      latent(s) -= eps.sum();
      try {
        shares = latent_to_observed(latent);
      } catch (const DataError&) {
        throw DataError("generate_population: observation " + std::to_string(i) + " has no positive latent share");
      }
      const double next = implicit_utility(shares, log_prices, e, h_p, full[j]);
      const double step = std::abs(next - y);
      y = next;
      if (step < kFixedPointTolerance) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw NumericalError("generate_population: utility fixed point did not converge for observation " +
                           std::to_string(i));
    if ((shares.array() == 0.0).any()) ++censored;
    out.data.observations.push_back(make_observation(shares, log_prices, e, h, h_p, h_y, z, 1.0));
    out.labels.push_back(j);
    out.latent.push_back(latent);
    out.y(i) = y;
  }
  out.censoring_rate = n > 0 ? static_cast<double>(censored) / n : 0.0;
  return out;
}

GroundTruth reference_truth(ReferenceDesign design, std::uint64_t seed) {
  GroundTruth t;
  t.seed = seed;
  Dimensions& d = t.dims;
  d.goods = 3;
  d.degree = 1;
  d.instruments = 4;
  d.clusters = design == ReferenceDesign::TwoCluster ? 2 : 1;
  d.symmetric = design != ReferenceDesign::Asymmetric;
  t.goods = {"good1", "good2", "base"};
  const int s = d.modeled();
  const int ds = d.endogenous();
  // Log expenditure centred at zero keeps p and p*y from being collinear.
  t.covariates.log_expenditure_mean = 0.0;
  t.covariates.log_expenditure_sd = 1.0;

  // Price-block first stage: two instruments per price, R^2 about 0.4.
  t.gamma = Vec::Zero(d.gamma_dim());
  const int nx = d.exogenous();
  const int ell = d.instruments;
  t.gamma(ds * nx + 0 * ell + 0) = 0.2;
  t.gamma(ds * nx + 0 * ell + 2) = 0.1;
  t.gamma(ds * nx + 1 * ell + 1) = 0.2;
  t.gamma(ds * nx + 1 * ell + 3) = 0.1;
  const double var_u = 0.075;

  auto make_sigma = [&](double sd_eps, double corr_eps, double corr_eu) {
    Mat sigma = Mat::Zero(s + ds, s + ds);
    for (int l = 0; l < s; ++l) {
      sigma(l, l) = sd_eps * sd_eps;
      sigma(s + l, s + l) = var_u;
      sigma(l, s + l) = sigma(s + l, l) = corr_eu * sd_eps * std::sqrt(var_u);
    }
    sigma(0, 1) = sigma(1, 0) = corr_eps * sd_eps * sd_eps;
    for (int k = 2 * s; k < s + ds; ++k) sigma(k, k) = 1.0;
    return sigma;
  };

  EasiCoefficients c = EasiCoefficients::zero(d);
  c.A[0] << -0.05, 0.01, 0.01, -0.04;
  c.B << -0.01, 0.004, 0.004, -0.008;
  switch (design) {
    case ReferenceDesign::TwoCluster: {
      EasiCoefficients c2 = c;
      c.b[0] << 0.60, 0.06;
      c.b[1] << -0.02, 0.01;
      c2.b[0] << 0.06, 0.50;
      c2.b[1] << 0.015, -0.02;
      c2.A[0] << -0.03, 0.008, 0.008, -0.06;
      c2.B << -0.006, 0.002, 0.002, -0.012;
      t.coeffs = {c, c2};
      t.sigma = {make_sigma(0.08, -0.3, 0.4), make_sigma(0.07, 0.2, 0.3)};
      t.phi = Vec(2);
      t.phi << 0.6, 0.4;
      break;
    }
    case ReferenceDesign::Symmetric:
      c.b[0] << 0.40, 0.30;
      t.coeffs = {c};
      t.sigma = {make_sigma(0.08, -0.3, 0.4)};
      t.phi = Vec::Ones(1);
      break;
    case ReferenceDesign::Asymmetric:
      c.b[0] << 0.40, 0.30;
      c.A[0] << -0.05, 0.10, -0.10, -0.04;
      c.B << -0.01, 0.02, -0.01, -0.008;
      t.coeffs = {c};
      t.sigma = {make_sigma(0.08, -0.3, 0.4)};
      t.phi = Vec::Ones(1);
      break;
  }
  return t;
}

std::string truth_to_json(const GroundTruth& t) {
  json clusters = json::array();
  for (std::size_t j = 0; j < t.coeffs.size(); ++j) {
    json c = coeffs_to_json(t.coeffs[j]);
    c["sigma"] = detail::to_json(t.sigma[j]);
    clusters.push_back(std::move(c));
  }
  const CovariateSpec& cv = t.covariates;
  json doc{{"dimensions", detail::to_json(t.dims)},
           {"goods", t.goods},
           {"seed", t.seed},
           {"phi", detail::to_json(t.phi)},
           {"gamma", detail::to_json(t.gamma)},
           {"clusters", clusters},
           {"covariates",
            {{"h_binary", flags_to_json(cv.h_binary)},
             {"h_p_binary", flags_to_json(cv.h_p_binary)},
             {"h_y_binary", flags_to_json(cv.h_y_binary)},
             {"log_expenditure_mean", cv.log_expenditure_mean},
             {"log_expenditure_sd", cv.log_expenditure_sd},
             {"base_log_price_mean", cv.base_log_price_mean},
             {"base_log_price_sd", cv.base_log_price_sd},
             {"instrument_sd", cv.instrument_sd}}}};
  return doc.dump(2);
}

namespace {

GroundTruth truth_from(const json& doc) {
  GroundTruth t;
  t.dims = detail::dims_from(doc.at("dimensions"));
  if (doc.contains("goods")) t.goods = doc.at("goods").get<std::vector<std::string>>();
  t.seed = doc.value("seed", std::uint64_t{1});
  t.phi = detail::vec_from(doc.at("phi"), "truth phi");
  t.gamma = detail::vec_from(doc.at("gamma"), "truth gamma");
  for (const auto& c : doc.at("clusters")) {
    t.coeffs.push_back(coeffs_from_json(c, t.dims));
    t.sigma.push_back(detail::mat_from(c.at("sigma"), "truth sigma"));
  }
  if (doc.contains("covariates")) {
    const json& cv = doc.at("covariates");
    CovariateSpec& o = t.covariates;
    o.h_binary = flags_from(cv, "h_binary");
    o.h_p_binary = flags_from(cv, "h_p_binary");
    o.h_y_binary = flags_from(cv, "h_y_binary");
    o.log_expenditure_mean = cv.value("log_expenditure_mean", o.log_expenditure_mean);
    o.log_expenditure_sd = cv.value("log_expenditure_sd", o.log_expenditure_sd);
    o.base_log_price_mean = cv.value("base_log_price_mean", o.base_log_price_mean);
    o.base_log_price_sd = cv.value("base_log_price_sd", o.base_log_price_sd);
    o.instrument_sd = cv.value("instrument_sd", o.instrument_sd);
  }
  t.validate();
  return t;
}

}  // namespace

GroundTruth truth_from_json(const std::string& text) {
  try {
    return truth_from(json::parse(text));
  } catch (const json::exception& e) {
    throw DataError(std::string("truth file: ") + e.what());
  }
}

std::string sidecar_to_json(const GroundTruth& truth, const SyntheticSample& sample) {
  json doc{{"truth", json::parse(truth_to_json(truth))}};
  json labels = json::array(), latent = json::array();
  for (int l : sample.labels) labels.push_back(l + 1);
  for (const auto& v : sample.latent) latent.push_back(detail::to_json(v));
  doc["labels"] = labels;
  doc["latent_shares"] = latent;
  doc["utility"] = detail::to_json(sample.y);
  doc["censoring_rate"] = sample.censoring_rate;
  return doc.dump(1);
}

Sidecar sidecar_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    Sidecar s;
    s.truth = truth_from(doc.at("truth"));
    for (const auto& l : doc.at("labels")) s.labels.push_back(l.get<int>() - 1);
    return s;
  } catch (const json::exception& e) {
    throw DataError(std::string("truth sidecar: ") + e.what());
  }
}

std::vector<int> optimal_assignment(const Mat& score) {
  const int n = static_cast<int>(score.rows());
  if (score.cols() != n) throw DimensionError("optimal_assignment: square matrix expected");
  // Hungarian method on cost = -score, potentials u (rows) and v (columns).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -score(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> out(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) out[p[j] - 1] = j - 1;
  return out;
}

RecoveryReport recovery_report(const GroundTruth& truth, const Chain& chain, const std::vector<int>& labels,
                               const EvaluationPoint& at, double mass) {
  if (chain.snapshots.empty()) throw Error("recovery report: chain has no retained draws");
  if (static_cast<int>(labels.size()) != chain.observations)
    throw DimensionError("recovery report: one label per observation expected");
  if (truth.dims.goods != chain.dims.goods || truth.dims.beta_dim() != chain.dims.beta_dim() ||
      truth.dims.exogenous() != chain.dims.exogenous())
    throw DimensionError("recovery report: truth and chain dimensions differ");

  const int jt = truth.dims.clusters;
  const int jc = chain.dims.clusters;
  const int k = std::max(jt, jc);
  RecoveryReport r;
  const std::vector<int> modal = modal_assignments(chain);
  r.confusion = Mat::Zero(jt, jc);
  for (std::size_t i = 0; i < labels.size(); ++i) r.confusion(labels[i], modal[i]) += 1.0;
  Mat padded = Mat::Zero(k, k);
  padded.topLeftCorner(jt, jc) = r.confusion;
  const std::vector<int> match = optimal_assignment(padded);
  r.matching.assign(jt, -1);
  double hits = 0.0;
  for (int j = 0; j < jt; ++j)
    if (match[j] < jc) {
      r.matching[j] = match[j];
      hits += r.confusion(j, match[j]);
    }
  r.assignment_accuracy = labels.empty() ? 1.0 : hits / static_cast<double>(labels.size());

  r.mean_occupancy = Vec::Zero(jc);
  for (const auto& snap : chain.snapshots)
    for (int label : snap.psi) r.mean_occupancy(label) += 1.0;
  if (chain.observations > 0)
    r.mean_occupancy /= static_cast<double>(chain.snapshots.size()) * chain.observations;
  r.occupancy_collapse = (r.mean_occupancy.array() < kCollapseShare).any();

  std::size_t covered = 0;
  for (int j = 0; j < jt; ++j) {
    const int c = r.matching[j];
    if (c < 0) continue;
    const Vec beta_true = pack(truth.coeffs[j], chain.dims);
    for (Eigen::Index p = 0; p < beta_true.size(); ++p) {
      std::vector<double> draws;
      for (const auto& snap : chain.snapshots) draws.push_back(snap.beta[c](p));
      const PosteriorSummary sm = summarize(draws, mass);
      ParameterRecovery pr;
      pr.name = "beta[" + std::to_string(j + 1) + "][" + std::to_string(p + 1) + "]";
      pr.truth = beta_true(p);
      pr.median = sm.point;
      pr.low = sm.hpd_low;
      pr.high = sm.hpd_high;
      pr.covered = pr.truth >= pr.low && pr.truth <= pr.high;
      covered += pr.covered;
      r.parameters.push_back(pr);
    }

    const ElasticitySet e_true = elasticities(complete_system(truth.coeffs[j], truth.dims), at);
    std::vector<std::vector<double>> own(truth.dims.goods);
    for (const auto& snap : chain.snapshots) {
      const ElasticitySet e = elasticities(complete_system(unpack(snap.beta[c], chain.dims), chain.dims), at);
      for (int l = 0; l < truth.dims.goods; ++l) own[l].push_back(e.marshallian(l, l));
    }
    for (int l = 0; l < truth.dims.goods; ++l) {
      ElasticityRecovery er;
      er.cluster = j;
      er.good = l;
      er.truth = e_true.marshallian(l, l);
      er.median = median(own[l]);
      er.relative_error = std::abs(er.median - er.truth) / std::abs(er.truth);
      r.max_own_price_error = std::max(r.max_own_price_error, er.relative_error);
      r.own_price.push_back(er);
    }
  }
  r.coverage = r.parameters.empty() ? 0.0 : static_cast<double>(covered) / r.parameters.size();
  return r;
}

std::string recovery_to_json(const RecoveryReport& r) {
  json params = json::array(), own = json::array();
  for (const auto& p : r.parameters)
    params.push_back({{"name", p.name}, {"truth", p.truth}, {"median", p.median}, {"hpd_low", p.low},
                      {"hpd_high", p.high}, {"covered", p.covered}});
  for (const auto& e : r.own_price)
    own.push_back({{"cluster", e.cluster + 1}, {"good", e.good + 1}, {"truth", e.truth}, {"median", e.median},
                   {"relative_error", e.relative_error}});
  json matching = json::array();
  for (int m : r.matching) matching.push_back(m < 0 ? -1 : m + 1);
  return json{{"matching", matching},
              {"confusion", detail::to_json(r.confusion)},
              {"assignment_accuracy", r.assignment_accuracy},
              {"coverage", r.coverage},
              {"max_own_price_error", r.max_own_price_error},
              {"mean_occupancy", detail::to_json(r.mean_occupancy)},
              {"occupancy_collapse", r.occupancy_collapse},
              {"own_price", own},
              {"parameters", params}}
      .dump(2);
}

}  // namespace easimix
