#pragma once

#include "easimix/analytics.hpp"
#include "easimix/easi.hpp"
#include "easimix/gibbs.hpp"
#include "easimix/summary.hpp"

#include <string>
#include <vector>

namespace easimix {

inline constexpr double kDefaultLegalCapture = 0.66;
inline constexpr double kDefaultMarginalCost = 2.0;
inline constexpr double kMonthsPerYear = 12.0;

/// A covariate set to `value` when a scenario grants access.
struct CovariateOverride {
  enum class Block { H, HP, HY } block = Block::H;
  int index = 0;
  double value = 1.0;
};

/// How post-scenario quantities are formed. Exact reads them off the solved
/// share system at fixed expenditure; Elasticity applies
/// exp(sum_k E_lk log m_k) with Marshallian elasticities at the unit's
/// pre-scenario point, which breaks down for units with tiny shares.
enum class QuantityRule { Exact, Elasticity };

/// Prices, taxes and marginal costs are in the dataset's price unit per
/// physical unit; `price_scale` converts one price unit into the currency of
/// expenditure (0.01 for cents against dollars).
struct Scenario {
  std::string name = "scenario";
  Vec price_multipliers;
  int legalized_good = 0;  // 0-based
  double legal_capture = kDefaultLegalCapture;
  double tax_per_unit = 0.0;
  double marginal_cost_per_unit = kDefaultMarginalCost;
  double price_scale = 1.0;
  bool access_override = false;
  std::vector<CovariateOverride> access_covariates;
  int cluster = 0;  // coefficients used for units without their own label
  QuantityRule quantity_rule = QuantityRule::Exact;

  void validate(int goods) const;
};

/// Annualized equivalent variation for a monthly expenditure level.
double equivalent_variation(const Vec& w0, const Vec& p0, double monthly_expenditure, const Vec& w1,
                            const Vec& p1, const Mat& a0_full);

/// exp(elasticity * log(multiplier)) - 1.
double quantity_change(double elasticity, double multiplier);

/// Multi-price version: exp(sum_j E_lj log m_j) - 1 for each good l.
Vec quantity_changes(const Mat& marshallian, const Vec& multipliers);

struct UnitOutcome {
  Vec shares_post;
  Vec log_prices_post;
  Vec quantity_pre;   // monthly physical units
  Vec quantity_post;
  Vec quantity_change;
  double ev_annual = 0.0;
  double expenditure_post_annual = 0.0;  // currency
};

struct CounterfactualPopulation {
  std::vector<Observation> pre;
  std::vector<Observation> post;
  std::vector<UnitOutcome> units;
};

/// Applies a scenario with one coefficient set per cluster. Post shares solve
/// the share system at new prices with each unit's residual held fixed;
/// quantities follow the scenario's QuantityRule.
CounterfactualPopulation apply_scenario(const std::vector<Observation>& population, const Scenario& scenario,
                                        const std::vector<FullCoefficients>& clusters,
                                        const std::vector<int>& unit_clusters = {});

struct FiscalSummary {
  double gov_revenue = 0.0;
  double dealer_revenue_change = 0.0;
  double dealer_profit_change = 0.0;
  double total_units = 0.0;  // annual, legalized good
  double legal_units = 0.0;
  double illegal_units = 0.0;
};

FiscalSummary fiscal_summary(const CounterfactualPopulation& cf, const Scenario& scenario);

struct OffsetUsers {
  double new_users = 0.0;
  double pct_change = 0.0;
};

OffsetUsers users_for_offset(double dealer_revenue_change, double avg_annual_expenditure, double current_users);

struct PolicyOutcome {
  double ev_annual = 0.0;  // weighted mean per person
  double gov_revenue_annual = 0.0;
  double dealer_revenue_change_annual = 0.0;
  double dealer_profit_change_annual = 0.0;
  double avg_annual_expenditure = 0.0;
  double new_users = 0.0;
  double users_for_offset_pct = 0.0;
  Vec quantity_changes;  // weighted aggregate fractional change per good
};

PolicyOutcome evaluate_policy(const std::vector<Observation>& population, const Scenario& scenario,
                              const std::vector<FullCoefficients>& clusters,
                              const std::vector<int>& unit_clusters = {});

struct PolicySummary {
  std::string scenario;
  PosteriorSummary ev;
  PosteriorSummary gov_revenue;
  PosteriorSummary dealer_revenue_change;
  PosteriorSummary dealer_profit_change;
  PosteriorSummary new_users;
  PosteriorSummary users_for_offset_pct;
  std::vector<PosteriorSummary> quantity_changes;
  std::vector<PolicyOutcome> draws;
};

PolicySummary posterior_policy_distribution(const Chain& chain, const std::vector<Observation>& population,
                                            const Scenario& scenario, const std::vector<int>& unit_clusters = {},
                                            double mass = kDefaultHpdMass);

/// Single unit at the representative point carrying the total survey weight.
Observation representative_agent(const Dataset& data);

}  // namespace easimix
