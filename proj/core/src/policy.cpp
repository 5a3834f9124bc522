#include "easimix/policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace easimix {

namespace {

constexpr int kMaxBisections = 200;
constexpr double kMaxBracketWidth = 64.0;

void apply_override(Observation& obs, const CovariateOverride& o) {
  Vec* target = nullptr;
  switch (o.block) {
    case CovariateOverride::Block::H: target = &obs.h; break;
    case CovariateOverride::Block::HP: target = &obs.h_p; break;
    case CovariateOverride::Block::HY: target = &obs.h_y; break;
  }
  if (o.index < 0 || o.index >= target->size()) throw DimensionError("access covariate index out of range");
  (*target)(o.index) = o.value;
}

}  // namespace

void Scenario::validate(int goods) const {
  if (price_multipliers.size() != goods)
    throw DimensionError("scenario '" + name + "': expected " + std::to_string(goods) + " price multipliers");
  if ((price_multipliers.array() <= 0.0).any()) throw DataError("scenario '" + name + "': multipliers must be positive");
  if (legalized_good < 0 || legalized_good >= goods)
    throw DataError("scenario '" + name + "': legalized good outside 1.." + std::to_string(goods));
  if (!(legal_capture >= 0.0 && legal_capture <= 1.0)) throw DataError("scenario '" + name + "': legal capture outside [0, 1]");
  if (!(tax_per_unit >= 0.0)) throw DataError("scenario '" + name + "': negative tax");
  if (!(price_scale > 0.0)) throw DataError("scenario '" + name + "': price scale must be positive");
}

double equivalent_variation(const Vec& w0, const Vec& p0, double monthly_expenditure, const Vec& w1,
                            const Vec& p1, const Mat& a0_full) {
  const double linear = -(w1.dot(p1) - w0.dot(p0));
  const double quadratic = 0.5 * (p1.dot(a0_full * p1) - p0.dot(a0_full * p0));
  return monthly_expenditure * (std::exp(linear + quadratic) - 1.0) * kMonthsPerYear;
}

double quantity_change(double elasticity, double multiplier) {
  if (!(multiplier > 0.0)) throw DataError("quantity change: price multiplier must be positive");
  return std::exp(elasticity * std::log(multiplier)) - 1.0;
}

Vec quantity_changes(const Mat& marshallian, const Vec& multipliers) {
  if ((multipliers.array() <= 0.0).any()) throw DataError("quantity change: price multipliers must be positive");
  const Vec log_m = multipliers.array().log();
  return ((marshallian * log_m).array().exp() - 1.0).matrix();
}

CounterfactualPopulation apply_scenario(const std::vector<Observation>& population, const Scenario& scenario,
                                        const std::vector<FullCoefficients>& clusters,
                                        const std::vector<int>& unit_clusters) {
  if (clusters.empty()) throw Error("apply_scenario: no coefficients");
  if (!unit_clusters.empty() && unit_clusters.size() != population.size())
    throw DimensionError("apply_scenario: one cluster label per unit expected");
  const int goods = static_cast<int>(clusters.front().b.front().size());
  scenario.validate(goods);
  const Vec log_m = scenario.price_multipliers.array().log();

  CounterfactualPopulation cf;
  cf.pre = population;
  for (std::size_t i = 0; i < population.size(); ++i) {
    const Observation& pre = population[i];
    const int j = unit_clusters.empty() || unit_clusters[i] < 0 ? scenario.cluster : unit_clusters[i];
    if (j < 0 || j >= static_cast<int>(clusters.size())) throw Error("apply_scenario: cluster out of range");
    const FullCoefficients& full = clusters[j];
    if (pre.shares.size() != goods) throw DimensionError("apply_scenario: unit has the wrong number of goods");

    Observation post = pre;
    post.log_prices = pre.log_prices + log_m;
    post.rel_log_prices = post.log_prices.head(goods - 1).array() - post.log_prices(goods - 1);
    if (scenario.access_override)
      for (const auto& o : scenario.access_covariates) apply_override(post, o);

    const double y0 = implicit_utility(pre, full);
    const Vec omega0 = predicted_shares(full, pre.log_prices, y0, pre.h, pre.h_p, pre.h_y);
    // Residuals are held fixed: w1 = w0 + omega(p1, y1) - omega0, with y1 the
    // utility that this share vector implies. The map is scalar in y, so the
    // root is bracketed from y0 outward and bisected.
    auto shares_at = [&](double y) -> Vec {
      return pre.shares + (predicted_shares(full, post.log_prices, y, post.h, post.h_p, post.h_y) - omega0);
    };
    auto gap = [&](double y) {
      return y - implicit_utility(shares_at(y), post.log_prices, post.log_expenditure, post.h_p, full);
    };
    double y1 = y0;
    const double g0 = gap(y0);
    if (g0 != 0.0) {
      double lo = y0, hi = y0, glo = g0;
      bool bracketed = false;
      for (double width = 0.125; width <= kMaxBracketWidth && !bracketed; width *= 2.0) {
        lo = y0 - width;
        hi = y0 + width;
        glo = gap(lo);
        bracketed = (glo <= 0.0) != (gap(hi) <= 0.0);
      }
      if (!bracketed)
        throw NumericalError("apply_scenario: no post-scenario utility found for unit " + std::to_string(i));
      for (int it = 0; it < kMaxBisections && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double gm = gap(mid);
        if ((gm <= 0.0) == (glo <= 0.0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      y1 = 0.5 * (lo + hi);
    }
    Vec w = shares_at(y1);
    if ((w.array() < 0.0).any()) w = latent_to_observed(w);
    post.shares = w;

    UnitOutcome u;
    u.shares_post = w;
    u.log_prices_post = post.log_prices;
    const double expenditure = std::exp(pre.log_expenditure);
    const Vec price0 = pre.log_prices.array().exp() * scenario.price_scale;
    const Vec price1 = post.log_prices.array().exp() * scenario.price_scale;
    u.quantity_pre = (pre.shares.array() * expenditure / price0.array()).matrix();

    u.quantity_change = Vec::Zero(goods);
    if (scenario.quantity_rule == QuantityRule::Exact) {
      u.quantity_post = (w.array() * expenditure / price1.array()).matrix();
      for (int l = 0; l < goods; ++l)
        if (u.quantity_pre(l) > 0.0) u.quantity_change(l) = u.quantity_post(l) / u.quantity_pre(l) - 1.0;
    } else {
      EvaluationPoint at = evaluation_point(pre);
      const SemiElasticities semi = semi_elasticities(full, at, y0);
      const Mat dw = marshallian_share_derivatives(full, at, y0, semi);
      for (int l = 0; l < goods; ++l) {
        if (!(pre.shares(l) > 0.0)) continue;
        double exponent = 0.0;
        for (int k = 0; k < goods; ++k) {
          const double e_lk = dw(l, k) / pre.shares(l) - (l == k ? 1.0 : 0.0);
          exponent += e_lk * log_m(k);
        }
        u.quantity_change(l) = std::exp(exponent) - 1.0;
      }
      u.quantity_post = (u.quantity_pre.array() * (1.0 + u.quantity_change.array())).matrix();
    }
    u.ev_annual = equivalent_variation(pre.shares, pre.log_prices, expenditure, post.shares, post.log_prices,
                                       full.A.front());
    u.expenditure_post_annual = kMonthsPerYear * u.quantity_post.dot(price1);
    cf.post.push_back(std::move(post));
    cf.units.push_back(std::move(u));
  }
  return cf;
}

FiscalSummary fiscal_summary(const CounterfactualPopulation& cf, const Scenario& scenario) {
  if (cf.pre.size() != cf.units.size() || cf.post.size() != cf.units.size())
    throw Error("fiscal summary: missing baseline");
  const int g = scenario.legalized_good;
  const double keep = 1.0 - scenario.legal_capture;
  const double mc = scenario.marginal_cost_per_unit * scenario.price_scale;
  FiscalSummary out;
  double revenue_pre = 0.0, revenue_post = 0.0, profit_pre = 0.0, profit_post = 0.0;
  for (std::size_t i = 0; i < cf.units.size(); ++i) {
    const UnitOutcome& u = cf.units[i];
    const double wt = cf.pre[i].weight * kMonthsPerYear;
    const Vec price0 = cf.pre[i].log_prices.array().exp() * scenario.price_scale;
    const Vec price1 = cf.post[i].log_prices.array().exp() * scenario.price_scale;
    const double units = wt * u.quantity_post(g);
    const double legal = scenario.legal_capture * units;
    out.total_units += units;
    out.legal_units += legal;
    out.illegal_units += units - legal;
    out.gov_revenue += scenario.legal_capture * scenario.tax_per_unit * scenario.price_scale * units;
    for (Eigen::Index l = 0; l < price0.size(); ++l) {
      const double pre = wt * u.quantity_pre(l) * price0(l);
      revenue_pre += pre;
      if (l == g) {
        const double post_units = keep * wt * u.quantity_post(l);
        revenue_post += post_units * price1(l);
        profit_pre += wt * u.quantity_pre(l) * (price0(l) - mc);
        profit_post += post_units * (price1(l) - mc);
      } else {
        const double post = wt * u.quantity_post(l) * price0(l);
        revenue_post += post;
        profit_pre += pre;
        profit_post += post;
      }
    }
  }
  out.dealer_revenue_change = revenue_post - revenue_pre;
  out.dealer_profit_change = profit_post - profit_pre;
  return out;
}

OffsetUsers users_for_offset(double dealer_revenue_change, double avg_annual_expenditure, double current_users) {
  if (!(avg_annual_expenditure > 0.0)) throw DataError("users for offset: average expenditure must be positive");
  if (!(current_users > 0.0)) throw DataError("users for offset: current users must be positive");
  OffsetUsers out;
  out.new_users = std::abs(dealer_revenue_change) / avg_annual_expenditure;
  out.pct_change = 100.0 * out.new_users / current_users;
  return out;
}

PolicyOutcome evaluate_policy(const std::vector<Observation>& population, const Scenario& scenario,
                              const std::vector<FullCoefficients>& clusters, const std::vector<int>& unit_clusters) {
  if (population.empty()) throw DataError("policy evaluation: empty population");
  const CounterfactualPopulation cf = apply_scenario(population, scenario, clusters, unit_clusters);
  const FiscalSummary fiscal = fiscal_summary(cf, scenario);
  PolicyOutcome out;
  double users = 0.0;
  const Eigen::Index goods = scenario.price_multipliers.size();
  Vec q0 = Vec::Zero(goods), q1 = Vec::Zero(goods);
  for (std::size_t i = 0; i < cf.units.size(); ++i) {
    const double wt = cf.pre[i].weight;
    users += wt;
    out.ev_annual += wt * cf.units[i].ev_annual;
    out.avg_annual_expenditure += wt * cf.units[i].expenditure_post_annual;
    q0 += wt * cf.units[i].quantity_pre;
    q1 += wt * cf.units[i].quantity_post;
  }
  if (!(users > 0.0)) throw DataError("policy evaluation: survey weights sum to zero");
  out.ev_annual /= users;
  out.avg_annual_expenditure /= users;
  out.gov_revenue_annual = fiscal.gov_revenue;
  out.dealer_revenue_change_annual = fiscal.dealer_revenue_change;
  out.dealer_profit_change_annual = fiscal.dealer_profit_change;
  const OffsetUsers offset = users_for_offset(fiscal.dealer_revenue_change, out.avg_annual_expenditure, users);
  out.new_users = offset.new_users;
  out.users_for_offset_pct = offset.pct_change;
  out.quantity_changes = Vec::Zero(goods);
  for (Eigen::Index l = 0; l < goods; ++l)
    if (q0(l) > 0.0) out.quantity_changes(l) = q1(l) / q0(l) - 1.0;
  return out;
}

PolicySummary posterior_policy_distribution(const Chain& chain, const std::vector<Observation>& population,
                                            const Scenario& scenario, const std::vector<int>& unit_clusters,
                                            double mass) {
  if (chain.snapshots.empty()) throw Error("policy distribution: chain has no retained draws");
  PolicySummary out;
  out.scenario = scenario.name;
  for (std::size_t t = 0; t < chain.snapshots.size(); ++t) {
    std::vector<FullCoefficients> clusters;
    for (const auto& b : chain.snapshots[t].beta) clusters.push_back(complete_system(unpack(b, chain.dims), chain.dims));
    try {
      out.draws.push_back(evaluate_policy(population, scenario, clusters, unit_clusters));
    } catch (const Error& e) {
      throw Error("policy distribution, draw " + std::to_string(t) + ": " + e.what());
    }
  }
  auto collect = [&](auto field) {
    std::vector<double> v;
    for (const auto& d : out.draws) v.push_back(field(d));
    return v;
  };
  auto summary = [&](auto field) {
    const std::vector<double> v = collect(field);
    if (v.size() >= 10) return summarize(v, mass);
    PosteriorSummary s;
    s.draw_count = v.size();
    s.point = median(v);
    s.hpd_low = *std::min_element(v.begin(), v.end());
    s.hpd_high = *std::max_element(v.begin(), v.end());
    return s;
  };
  out.ev = summary([](const PolicyOutcome& d) { return d.ev_annual; });
  out.gov_revenue = summary([](const PolicyOutcome& d) { return d.gov_revenue_annual; });
  out.dealer_revenue_change = summary([](const PolicyOutcome& d) { return d.dealer_revenue_change_annual; });
  out.dealer_profit_change = summary([](const PolicyOutcome& d) { return d.dealer_profit_change_annual; });
  out.new_users = summary([](const PolicyOutcome& d) { return d.new_users; });
  out.users_for_offset_pct = summary([](const PolicyOutcome& d) { return d.users_for_offset_pct; });
  for (Eigen::Index l = 0; l < scenario.price_multipliers.size(); ++l)
    out.quantity_changes.push_back(summary([l](const PolicyOutcome& d) { return d.quantity_changes(l); }));
  return out;
}

Observation representative_agent(const Dataset& data) {
  const EvaluationPoint at = representative_point(data);
  double total = 0.0;
  Vec z = Vec::Zero(data.dims.instruments);
  for (const auto& o : data.observations) {
    total += o.weight;
    z += o.weight * o.z;
  }
  return make_observation(at.shares, at.log_prices, at.log_expenditure, at.h, at.h_p, at.h_y, z / total, total);
}

}  // namespace easimix
