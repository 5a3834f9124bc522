#include "easimix/analytics.hpp"

#include <cmath>
#include <map>
#include <string>

namespace easimix {

namespace {

void require_positive(const Vec& shares) {
  for (Eigen::Index l = 0; l < shares.size(); ++l)
    if (!(shares(l) > 0.0))
      throw DataError("undefined elasticity: good " + std::to_string(l + 1) +
                      " has a zero share at the evaluation point");
}

Vec column_summary(const Dataset& data, const Vec Observation::*field, int width) {
  Vec out = Vec::Zero(width);
  double total = 0.0;
  for (const auto& o : data.observations) total += o.weight;
  for (int c = 0; c < width; ++c) {
    bool integral = true;
    for (const auto& o : data.observations)
      if (std::floor((o.*field)(c)) != (o.*field)(c)) integral = false;
    if (integral) {
      std::map<double, double> mass;
      for (const auto& o : data.observations) mass[(o.*field)(c)] += o.weight;
      double best = -1.0;
      for (const auto& [value, w] : mass)
        if (w > best) {
          best = w;
          out(c) = value;
        }
    } else {
      for (const auto& o : data.observations) out(c) += o.weight * (o.*field)(c);
      out(c) /= total;
    }
  }
  return out;
}

}  // namespace

EvaluationPoint evaluation_point(const Observation& obs) {
  return {obs.shares, obs.log_prices, obs.log_expenditure, obs.h, obs.h_p, obs.h_y};
}

EvaluationPoint representative_point(const Dataset& data) {
  if (data.observations.empty()) throw DataError("representative point of an empty dataset");
  const Dimensions& d = data.dims;
  double total = 0.0;
  Vec shares = Vec::Zero(d.goods);
  Vec prices = Vec::Zero(d.goods);
  double expenditure = 0.0;
  for (const auto& o : data.observations) {
    total += o.weight;
    shares += o.weight * o.shares;
    prices += o.weight * o.log_prices.array().exp().matrix();
    expenditure += o.weight * std::exp(o.log_expenditure);
  }
  if (!(total > 0.0)) throw DataError("representative point: survey weights sum to zero");
  EvaluationPoint at;
  at.shares = shares / shares.sum();
  at.log_prices = (prices / total).array().log();
  at.log_expenditure = std::log(expenditure / total);
  at.h = column_summary(data, &Observation::h, d.demographics);
  at.h_p = column_summary(data, &Observation::h_p, d.price_covariates);
  at.h_y = column_summary(data, &Observation::h_y, d.utility_covariates);
  return at;
}

SemiElasticities semi_elasticities(const FullCoefficients& full, const EvaluationPoint& at, double y) {
  const Vec& p = at.log_prices;
  const Eigen::Index goods = p.size();
  SemiElasticities out;
  out.gamma = full.price_matrix(at.h_p) + full.B * y;
  out.dy = Vec::Zero(goods);
  double ypow = 1.0;
  for (std::size_t r = 1; r < full.b.size(); ++r) {
    out.dy += full.b[r] * (static_cast<double>(r) * ypow);
    ypow *= y;
  }
  if (at.h_y.size() > 0) out.dy += full.D * at.h_y;
  out.dy += full.B * p;

  const double denom = 1.0 - 0.5 * p.dot(full.B * p);
  if (std::abs(denom) < kDegenerateDenominator)
    throw NumericalError("semi-elasticities: degenerate denominator 1 - p'Bp/2");
  const Mat k = Mat::Identity(goods, goods) + out.dy * p.transpose() / denom;
  // det(K) = 1 + p'dy / denom for a rank-one update of the identity.
  if (std::abs(1.0 + p.dot(out.dy) / denom) < 1e-12)
    throw NumericalError("semi-elasticities: singular Marshallian correction matrix");
  out.de = k.partialPivLu().solve(out.dy / denom);
  return out;
}

PriceElasticities price_elasticities(const Mat& gamma, const Vec& de, const Vec& shares) {
  require_positive(shares);
  const Eigen::Index goods = shares.size();
  if (gamma.rows() != goods || gamma.cols() != goods || de.size() != goods)
    throw DimensionError("price elasticities: shape mismatch");
  PriceElasticities out;
  out.hicksian.resize(goods, goods);
  out.marshallian.resize(goods, goods);
  for (Eigen::Index l = 0; l < goods; ++l)
    for (Eigen::Index j = 0; j < goods; ++j) {
      const double delta = l == j ? 1.0 : 0.0;
      out.hicksian(l, j) = -delta + gamma(l, j) / shares(l) + shares(j);
      out.marshallian(l, j) = -delta + gamma(l, j) / shares(l) - shares(j) / shares(l) * de(l);
    }
  return out;
}

Vec income_elasticities(const Vec& de, const Vec& shares) {
  require_positive(shares);
  if (de.size() != shares.size()) throw DimensionError("income elasticities: shape mismatch");
  return (de.array() / shares.array() + 1.0).matrix();
}

Mat marshallian_share_derivatives(const FullCoefficients& full, const EvaluationPoint& at, double y,
                                  const SemiElasticities& semi) {
  const Vec& p = at.log_prices;
  const Eigen::Index goods = p.size();
  const double denom = 1.0 - 0.5 * p.dot(full.B * p);
  const Mat k = Mat::Identity(goods, goods) + semi.dy * p.transpose() / denom;
  const Vec shift = at.shares - full.price_matrix(at.h_p) * p - y * (full.B * p);
  return k.partialPivLu().solve(semi.gamma) - semi.de * shift.transpose();
}

ElasticitySet elasticities(const FullCoefficients& full, const EvaluationPoint& at) {
  require_positive(at.shares);
  ElasticitySet out;
  out.evaluated_at = at;
  out.y = implicit_utility(at.shares, at.log_prices, at.log_expenditure, at.h_p, full);
  const SemiElasticities semi = semi_elasticities(full, at, out.y);
  out.gamma_semi = semi.gamma;
  out.dy_semi = semi.dy;
  out.de_semi = semi.de;
  const PriceElasticities pe = price_elasticities(semi.gamma, semi.de, at.shares);
  out.hicksian = pe.hicksian;
  const Mat dw = marshallian_share_derivatives(full, at, out.y, semi);
  const Eigen::Index goods = at.shares.size();
  out.marshallian = dw.array().colwise() / at.shares.array();
  out.marshallian -= Mat::Identity(goods, goods);
  out.income = income_elasticities(semi.de, at.shares);
  return out;
}

Mat engel_curve(const FullCoefficients& full, const Vec& h, const Vec& h_y, const Vec& e_grid) {
  const Eigen::Index goods = full.b.front().size();
  Mat out(e_grid.size(), goods);
  Vec fixed = Vec::Zero(goods);
  if (h.size() > 0) fixed += full.C * h;
  Vec slope = Vec::Zero(goods);
  if (h_y.size() > 0) slope += full.D * h_y;
  for (Eigen::Index g = 0; g < e_grid.size(); ++g) {
    const double e = e_grid(g);
    Vec w = fixed + slope * e;
    double er = 1.0;
    for (const auto& br : full.b) {
      w += br * er;
      er *= e;
    }
    out.row(g) = w.transpose();
  }
  return out;
}

MatrixSummary summarize_matrices(const std::vector<Mat>& draws, double mass) {
  if (draws.empty()) throw Error("no draws to summarize");
  MatrixSummary out;
  out.rows = static_cast<int>(draws.front().rows());
  out.cols = static_cast<int>(draws.front().cols());
  std::vector<double> cell(draws.size());
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) {
      for (std::size_t t = 0; t < draws.size(); ++t) cell[t] = draws[t](r, c);
      out.cells.push_back(summarize(cell, mass));
    }
  return out;
}

std::vector<ElasticityPosterior> posterior_elasticities(const Chain& chain, const EvaluationPoint& at,
                                                        double mass) {
  if (chain.snapshots.empty()) throw Error("posterior elasticities: chain has no retained draws");
  std::vector<ElasticityPosterior> out;
  for (int j = 0; j < chain.dims.clusters; ++j) {
    std::vector<Mat> hick, mars, inc;
    for (std::size_t t = 0; t < chain.snapshots.size(); ++t) {
      try {
        const FullCoefficients full = complete_system(unpack(chain.snapshots[t].beta[j], chain.dims), chain.dims);
        const ElasticitySet e = elasticities(full, at);
        hick.push_back(e.hicksian);
        mars.push_back(e.marshallian);
        inc.push_back(e.income);
      } catch (const NumericalError& err) {
        throw NumericalError("draw " + std::to_string(t) + ", cluster " + std::to_string(j + 1) + ": " +
                             err.what());
      }
    }
    ElasticityPosterior ep;
    ep.cluster = j;
    ep.hicksian = summarize_matrices(hick, mass);
    ep.marshallian = summarize_matrices(mars, mass);
    ep.income = summarize_matrices(inc, mass);
    out.push_back(std::move(ep));
  }
  return out;
}

Mat inclusion_probabilities(const Chain& chain) {
  if (chain.snapshots.empty()) throw Error("inclusion probabilities: chain has no retained draws");
  const int n = chain.observations;
  Mat out = Mat::Zero(n, chain.dims.clusters);
  for (const auto& snap : chain.snapshots)
    for (int i = 0; i < n; ++i) out(i, snap.psi[i]) += 1.0;
  return out / static_cast<double>(chain.snapshots.size());
}

std::vector<int> modal_assignments(const Chain& chain) {
  const Mat p = inclusion_probabilities(chain);
  std::vector<int> out(p.rows());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index best = 0;
    p.row(i).maxCoeff(&best);
    out[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace easimix
