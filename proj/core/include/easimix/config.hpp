#pragma once

#include "easimix/gibbs.hpp"
#include "easimix/policy.hpp"
#include "easimix/summary.hpp"

#include <optional>
#include <string>

namespace easimix {

struct Tolerances {
  double hpd_mass = kDefaultHpdMass;
  double regularity = 1e-10;
  int bayes_factor_prior_draws = 1000;
};

/// Model overrides applied on top of the dimensions a dataset implies.
struct DimensionOverrides {
  std::optional<int> degree;
  std::optional<int> clusters;
  std::optional<bool> symmetric;

  Dimensions apply(Dimensions dims) const;
};

/// Prior settings expressible in the config file; anything unset keeps the
/// defaults of PriorHyperparams::defaults.
struct PriorSettings {
  double coefficient_variance = 1000.0;
  std::optional<double> alpha;
  std::optional<double> nu;
  std::optional<double> scale;

  PriorHyperparams build(const Dimensions& dims) const;
};

struct RunConfig {
  DimensionOverrides dimensions;
  PriorSettings priors;
  ChainSettings sampler;
  Tolerances tolerances;
};

RunConfig parse_config(const std::string& text);
RunConfig read_config(const std::string& path);
std::string config_to_json(const RunConfig& config);

/// Scenario files; `legalized_good` may be a good name or a 1-based index.
Scenario parse_scenario(const std::string& text, const std::vector<std::string>& goods);
Scenario read_scenario(const std::string& path, const std::vector<std::string>& goods);
std::string scenario_to_json(const Scenario& scenario, const std::vector<std::string>& goods);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace easimix
