#include "easimix/config.hpp"

#include "json_util.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace easimix {

namespace {

using detail::json;

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

Dimensions DimensionOverrides::apply(Dimensions dims) const {
  if (degree) dims.degree = *degree;
  if (clusters) dims.clusters = *clusters;
  if (symmetric) dims.symmetric = *symmetric;
  dims.validate();
  return dims;
}

PriorHyperparams PriorSettings::build(const Dimensions& dims) const {
  if (!(coefficient_variance > 0.0)) throw DataError("config: prior variance must be positive");
  PriorHyperparams p = PriorHyperparams::defaults(dims, coefficient_variance);
  if (alpha) p.alpha.setConstant(*alpha);
  if (nu) {
    p.nu_uu = *nu;
    std::fill(p.nu.begin(), p.nu.end(), *nu);
  }
  if (scale) {
    p.scale_uu *= *scale;
    for (auto& m : p.scale_eps) m *= *scale;
  }
  p.validate(dims);
  return p;
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  try {
    const json doc = json::parse(text);
    if (doc.contains("dimensions")) {
      const json& d = doc.at("dimensions");
      if (d.contains("degree")) c.dimensions.degree = d.at("degree").get<int>();
      if (d.contains("clusters")) c.dimensions.clusters = d.at("clusters").get<int>();
      if (d.contains("symmetric")) c.dimensions.symmetric = d.at("symmetric").get<bool>();
    }
    if (doc.contains("priors")) {
      const json& p = doc.at("priors");
      c.priors.coefficient_variance = p.value("coefficient_variance", c.priors.coefficient_variance);
      if (p.contains("alpha")) c.priors.alpha = p.at("alpha").get<double>();
      if (p.contains("nu")) c.priors.nu = p.at("nu").get<double>();
      if (p.contains("scale")) c.priors.scale = p.at("scale").get<double>();
    }
    if (doc.contains("sampler")) {
      const json& s = doc.at("sampler");
      ChainSettings& cs = c.sampler;
      cs.sweeps = s.value("sweeps", cs.sweeps);
      cs.burn_in = s.value("burn_in", cs.burn_in);
      cs.thin = s.value("thin", cs.thin);
      cs.seed = s.value("seed", cs.seed);
      cs.threads = s.value("threads", cs.threads);
      cs.truncation_sweeps = s.value("truncation_sweeps", cs.truncation_sweeps);
      cs.store_latent = s.value("store_latent", cs.store_latent);
    }
    if (doc.contains("tolerances")) {
      const json& t = doc.at("tolerances");
      c.tolerances.hpd_mass = t.value("hpd_mass", c.tolerances.hpd_mass);
      c.tolerances.regularity = t.value("regularity", c.tolerances.regularity);
      c.tolerances.bayes_factor_prior_draws = t.value("bayes_factor_prior_draws", c.tolerances.bayes_factor_prior_draws);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  c.sampler.validate();
  if (!(c.tolerances.hpd_mass > 0.0 && c.tolerances.hpd_mass < 1.0)) throw DataError("config: hpd_mass must be in (0, 1)");
  return c;
}

RunConfig read_config(const std::string& path) { return parse_config(read_text_file(path)); }

std::string config_to_json(const RunConfig& c) {
  json dims = json::object();
  if (c.dimensions.degree) dims["degree"] = *c.dimensions.degree;
  if (c.dimensions.clusters) dims["clusters"] = *c.dimensions.clusters;
  if (c.dimensions.symmetric) dims["symmetric"] = *c.dimensions.symmetric;
  json priors{{"coefficient_variance", c.priors.coefficient_variance}};
  if (c.priors.alpha) priors["alpha"] = *c.priors.alpha;
  if (c.priors.nu) priors["nu"] = *c.priors.nu;
  if (c.priors.scale) priors["scale"] = *c.priors.scale;
  const ChainSettings& s = c.sampler;
  return json{{"dimensions", dims},
              {"priors", priors},
              {"sampler",
               {{"sweeps", s.sweeps},
                {"burn_in", s.burn_in},
                {"thin", s.thin},
                {"seed", s.seed},
                {"threads", s.threads},
                {"truncation_sweeps", s.truncation_sweeps},
                {"store_latent", s.store_latent}}},
              {"tolerances",
               {{"hpd_mass", c.tolerances.hpd_mass},
                {"regularity", c.tolerances.regularity},
                {"bayes_factor_prior_draws", c.tolerances.bayes_factor_prior_draws}}}}
      .dump(2);
}

Scenario parse_scenario(const std::string& text, const std::vector<std::string>& goods) {
  Scenario s;
  const int S = static_cast<int>(goods.size());
  try {
    const json doc = json::parse(text);
    s.name = doc.value("name", s.name);
    s.price_multipliers = Vec::Ones(S);
    if (doc.contains("price_multipliers")) {
      const json& pm = doc.at("price_multipliers");
      if (pm.is_object()) {
        for (const auto& [name, v] : pm.items()) {
          auto it = std::find(goods.begin(), goods.end(), name);
          if (it == goods.end()) throw DataError("scenario: unknown good '" + name + "'");
          s.price_multipliers(it - goods.begin()) = v.get<double>();
        }
      } else {
        s.price_multipliers = detail::vec_from(pm, "scenario price_multipliers");
      }
    }
    if (doc.contains("legalized_good")) {
      const json& g = doc.at("legalized_good");
      if (g.is_string()) {
        auto it = std::find(goods.begin(), goods.end(), g.get<std::string>());
        if (it == goods.end()) throw DataError("scenario: unknown good '" + g.get<std::string>() + "'");
        s.legalized_good = static_cast<int>(it - goods.begin());
      } else {
        s.legalized_good = g.get<int>() - 1;
      }
    }
    s.legal_capture = doc.value("legal_capture", s.legal_capture);
    s.tax_per_unit = doc.value("tax_per_unit", s.tax_per_unit);
    s.marginal_cost_per_unit = doc.value("marginal_cost_per_unit", s.marginal_cost_per_unit);
    s.price_scale = doc.value("price_scale", s.price_scale);
    s.access_override = doc.value("access_override", s.access_override);
    s.cluster = doc.value("cluster", 1) - 1;
    const std::string rule = doc.value("quantity_rule", std::string("exact"));
    if (rule == "exact") s.quantity_rule = QuantityRule::Exact;
    else if (rule == "elasticity") s.quantity_rule = QuantityRule::Elasticity;
    else throw DataError("scenario: quantity_rule must be 'exact' or 'elasticity'");
    if (doc.contains("access_covariates")) {
      for (const auto& a : doc.at("access_covariates")) {
        CovariateOverride o;
        const std::string block = a.value("block", std::string("h"));
        if (block == "h") o.block = CovariateOverride::Block::H;
        else if (block == "h_p") o.block = CovariateOverride::Block::HP;
        else if (block == "h_y") o.block = CovariateOverride::Block::HY;
        else throw DataError("scenario: unknown covariate block '" + block + "'");
        o.index = a.at("index").get<int>() - 1;
        o.value = a.value("value", 1.0);
        s.access_covariates.push_back(o);
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("scenario: ") + e.what());
  }
  s.validate(S);
  return s;
}

Scenario read_scenario(const std::string& path, const std::vector<std::string>& goods) {
  return parse_scenario(read_text_file(path), goods);
}

std::string scenario_to_json(const Scenario& s, const std::vector<std::string>& goods) {
  json pm = json::object();
  for (Eigen::Index l = 0; l < s.price_multipliers.size(); ++l) {
    const std::string name = l < static_cast<Eigen::Index>(goods.size()) ? goods[l] : "good" + std::to_string(l + 1);
    pm[name] = s.price_multipliers(l);
  }
  json access = json::array();
  for (const auto& o : s.access_covariates) {
    const char* block = o.block == CovariateOverride::Block::H ? "h" : o.block == CovariateOverride::Block::HP ? "h_p" : "h_y";
    access.push_back({{"block", block}, {"index", o.index + 1}, {"value", o.value}});
  }
  json doc{{"name", s.name},
           {"price_multipliers", pm},
           {"legalized_good", s.legalized_good + 1},
           {"legal_capture", s.legal_capture},
           {"tax_per_unit", s.tax_per_unit},
           {"marginal_cost_per_unit", s.marginal_cost_per_unit},
           {"price_scale", s.price_scale},
           {"access_override", s.access_override},
           {"access_covariates", access},
           {"cluster", s.cluster + 1},
           {"quantity_rule", s.quantity_rule == QuantityRule::Exact ? "exact" : "elasticity"}};
  return doc.dump(2);
}

}  // namespace easimix
