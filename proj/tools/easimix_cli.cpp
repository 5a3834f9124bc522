#include "easimix/analytics.hpp"
#include "easimix/bayes_factor.hpp"
#include "easimix/chain_io.hpp"
#include "easimix/config.hpp"
#include "easimix/dataset.hpp"
#include "easimix/diagnostics.hpp"
#include "easimix/gibbs.hpp"
#include "easimix/policy.hpp"
#include "easimix/report.hpp"
#include "easimix/synthgen.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace easimix;
using json = nlohmann::ordered_json;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string log_level = "info";
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Writes to `path`, or stdout when it is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    write_text_file(path, text);
    spdlog::info("wrote {}", path);
  }
}

std::string chain_dir(const std::string& chain) {
  fs::path p(chain);
  if (fs::is_directory(p)) return p.string();
  return p.parent_path().string();
}

// The canonical dataset an estimate run stores next to its chain.
Dataset chain_dataset(const std::string& chain) {
  const fs::path manifest = fs::path(chain_dir(chain)) / "dataset.json";
  if (!fs::exists(manifest)) throw IoError("no dataset.json next to chain " + chain);
  return load_dataset(read_manifest(manifest.string()));
}

Dataset with_chain_dims(Dataset data, const Chain& chain) {
  if (data.dims.goods != chain.dims.goods) throw DimensionError("dataset and chain disagree on the number of goods");
  data.dims = chain.dims;
  return data;
}

EvaluationPoint read_point(const std::string& path, const Dimensions& dims) {
  const json j = json::parse(read_text_file(path));
  auto vec = [&](const char* key, int n) {
    Vec v = Vec::Zero(n);
    if (j.contains(key)) {
      if (static_cast<int>(j.at(key).size()) != n) throw DimensionError(std::string("point file: length of ") + key);
      for (int k = 0; k < n; ++k) v(k) = j.at(key)[k].get<double>();
    }
    return v;
  };
  EvaluationPoint at;
  at.shares = vec("shares", dims.goods);
  at.log_prices = vec("log_prices", dims.goods);
  at.log_expenditure = j.at("log_expenditure").get<double>();
  at.h = vec("h", dims.demographics);
  at.h_p = vec("h_p", dims.price_covariates);
  at.h_y = vec("h_y", dims.utility_covariates);
  return at;
}

std::vector<std::string> goods_or_default(const Dataset& data) {
  std::vector<std::string> goods = data.goods;
  for (int l = static_cast<int>(goods.size()); l < data.dims.goods; ++l) goods.push_back("good" + std::to_string(l + 1));
  return goods;
}

std::string elasticity_csv(const std::vector<ElasticityPosterior>& post, const std::vector<std::string>& goods) {
  std::ostringstream out;
  out << "cluster,kind,good,wrt,median,hpd_low,hpd_high\n";
  for (const auto& e : post) {
    auto block = [&](const char* kind, const MatrixSummary& m) {
      for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) {
          const PosteriorSummary& s = m(r, c);
          out << e.cluster + 1 << ',' << kind << ',' << goods[r] << ',' << (m.cols == 1 ? "expenditure" : goods[c]) << ','
              << num(s.point) << ',' << num(s.hpd_low) << ',' << num(s.hpd_high) << '\n';
        }
    };
    block("marshallian", e.marshallian);
    block("hicksian", e.hicksian);
    block("income", e.income);
  }
  return out.str();
}

std::string policy_json(const PolicySummary& p, const std::vector<std::string>& goods) {
  auto cell = [](const PosteriorSummary& s) {
    return json{{"median", s.point}, {"hpd_low", s.hpd_low}, {"hpd_high", s.hpd_high}, {"draws", s.draw_count}};
  };
  json q = json::object();
  for (std::size_t l = 0; l < p.quantity_changes.size(); ++l) q[goods[l]] = cell(p.quantity_changes[l]);
  return json{{"scenario", p.scenario},
              {"ev_annual", cell(p.ev)},
              {"gov_revenue", cell(p.gov_revenue)},
              {"dealer_revenue_change", cell(p.dealer_revenue_change)},
              {"dealer_profit_change", cell(p.dealer_profit_change)},
              {"new_users", cell(p.new_users)},
              {"users_for_offset_pct", cell(p.users_for_offset_pct)},
              {"quantity_changes", q}}
             .dump(2) +
         "\n";
}

std::vector<Observation> population_for(const std::string& spec, const Dataset& chain_data) {
  if (spec == "representative") return {representative_agent(chain_data)};
  if (spec == "sample" || spec.empty()) return chain_data.observations;
  return load_dataset(read_manifest(spec)).observations;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian mixture EASI demand estimation"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  // estimate
  auto* est = app.add_subcommand("estimate", "run the Gibbs sampler on a dataset");
  std::string est_data, est_manifest, est_config, est_out;
  est->add_option("--data", est_data, "data file; overrides the manifest's data path");
  est->add_option("--manifest", est_manifest, "dataset manifest (JSON)")->required();
  est->add_option("--config", est_config, "run configuration (JSON)");
  est->add_option("--out", est_out, "output directory")->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset with a truth sidecar");
  std::string sim_truth, sim_out;
  int sim_n = 1000;
  sim->add_option("--truth", sim_truth, "ground-truth file (JSON)")->required();
  sim->add_option("--n", sim_n, "observations")->check(CLI::NonNegativeNumber);
  sim->add_option("--out", sim_out, "output directory")->required();

  // elasticities
  auto* ela = app.add_subcommand("elasticities", "posterior elasticities at a point");
  std::string ela_chain, ela_at = "mean", ela_out;
  ela->add_option("--chain", ela_chain, "chain directory or file")->required();
  ela->add_option("--at", ela_at, "'mean' or a point file (JSON)");
  ela->add_option("--out", ela_out, "output file (default stdout)");

  // counterfactual
  auto* cf = app.add_subcommand("counterfactual", "posterior policy outcomes of a scenario");
  std::string cf_chain, cf_scenario, cf_population = "sample", cf_out;
  cf->add_option("--chain", cf_chain, "chain directory or file")->required();
  cf->add_option("--scenario", cf_scenario, "scenario file (JSON)")->required();
  cf->add_option("--population", cf_population, "'sample', 'representative' or a dataset manifest");
  cf->add_option("--out", cf_out, "output file (default stdout)");

  // diagnose
  auto* dia = app.add_subcommand("diagnose", "trace diagnostics");
  std::string dia_chain, dia_params = "*", dia_out;
  dia->add_option("--chain", dia_chain, "chain directory or file")->required();
  dia->add_option("--params", dia_params, "comma-separated wildcard patterns");
  dia->add_option("--out", dia_out, "output file (default stdout)");

  // report
  auto* rep = app.add_subcommand("report", "write report tables and plot data");
  std::string rep_chain, rep_out, rep_params = "*";
  std::vector<std::string> rep_scenarios;
  rep->add_option("--chain", rep_chain, "chain directory or file")->required();
  rep->add_option("--out-dir", rep_out, "report directory")->required();
  rep->add_option("--scenario", rep_scenarios, "scenario files to include");
  rep->add_option("--params", rep_params, "parameters for trace tables");

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) g.seed = seed_value;

  auto logger = spdlog::stderr_color_mt("easimix");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    if (*est) {
      DatasetManifest manifest = read_manifest(est_manifest);
      if (!est_data.empty()) manifest.data_path = est_data;
      LoadReport lr;
      Dataset data = load_dataset(manifest, &lr);
      spdlog::info("loaded {} of {} rows", lr.rows_kept, lr.rows_read);
      if (lr.missing_instrument_rows > 0) spdlog::warn("excluded {} rows with missing instruments", lr.missing_instrument_rows);
      if (lr.renormalized_rows > 0) spdlog::info("renormalized shares in {} rows", lr.renormalized_rows);
      RunConfig config = est_config.empty() ? RunConfig{} : read_config(est_config);
      data.dims = config.dimensions.apply(data.dims);
      if (g.seed) config.sampler.seed = *g.seed;
      config.sampler.threads = g.threads;
      const PriorHyperparams priors = config.priors.build(data.dims);
      fs::create_directories(est_out);
      spdlog::info("sampling {} sweeps, J = {}, seed {}", config.sampler.sweeps, data.dims.clusters, config.sampler.seed);
      const Chain chain = run_chain(data, priors, config.sampler);
      for (const auto& note : chain.notes) spdlog::warn("{}", note);
      persist_chain(chain, (fs::path(est_out) / "chain").string());
      write_dataset(data, (fs::path(est_out) / "dataset").string(), manifest.units);
      write_text_file((fs::path(est_out) / "config.json").string(), config_to_json(config));
      spdlog::info("wrote chain with {} draws to {}", chain.snapshots.size(), est_out);
    } else if (*sim) {
      GroundTruth truth = truth_from_json(read_text_file(sim_truth));
      if (g.seed) truth.seed = *g.seed;
      const SyntheticSample sample = generate_population(truth, sim_n);
      fs::create_directories(sim_out);
      write_dataset(sample.data, (fs::path(sim_out) / "data").string());
      write_text_file((fs::path(sim_out) / "truth.json").string(), sidecar_to_json(truth, sample));
      spdlog::info("simulated {} observations, censoring rate {:.3f}", sim_n, sample.censoring_rate);
    } else if (*ela) {
      const Chain chain = load_chain(ela_chain);
      EvaluationPoint at;
      std::vector<std::string> goods;
      if (ela_at == "mean") {
        const Dataset data = with_chain_dims(chain_dataset(ela_chain), chain);
        at = representative_point(data);
        goods = goods_or_default(data);
      } else {
        at = read_point(ela_at, chain.dims);
        for (int l = 0; l < chain.dims.goods; ++l) goods.push_back("good" + std::to_string(l + 1));
      }
      emit(ela_out, elasticity_csv(posterior_elasticities(chain, at), goods));
    } else if (*cf) {
      const Chain chain = load_chain(cf_chain);
      const Dataset data = with_chain_dims(chain_dataset(cf_chain), chain);
      const std::vector<std::string> goods = goods_or_default(data);
      const Scenario scenario = read_scenario(cf_scenario, goods);
      const std::vector<Observation> population = population_for(cf_population, data);
      std::vector<int> labels;
      if (cf_population == "sample") labels = modal_assignments(chain);
      emit(cf_out, policy_json(posterior_policy_distribution(chain, population, scenario, labels), goods));
    } else if (*dia) {
      const Chain chain = load_chain(dia_chain);
      std::ostringstream out;
      out << "parameter,ess,degenerate,acf1,median,hpd_low,hpd_high\n";
      for (const auto& d : chain_diagnostics(chain, dia_params)) {
        const PosteriorSummary s = summarize(d.trace);
        out << d.name << ',' << num(d.ess.ess) << ',' << (d.ess.degenerate ? "true" : "false") << ','
            << num(d.acf.size() > 1 ? d.acf[1] : 0.0) << ',' << num(s.point) << ',' << num(s.hpd_low) << ','
            << num(s.hpd_high) << '\n';
      }
      emit(dia_out, out.str());
    } else if (*rep) {
      const Chain chain = load_chain(rep_chain);
      ReportInputs in;
      in.chain = &chain;
      in.parameters = rep_params;
      std::optional<Dataset> data;
      if (fs::exists(fs::path(chain_dir(rep_chain)) / "dataset.json")) data = with_chain_dims(chain_dataset(rep_chain), chain);
      if (data) {
        in.data = &*data;
        in.goods = goods_or_default(*data);
        if (chain.snapshots.size() >= 10) {
          in.elasticities = posterior_elasticities(chain, representative_point(*data));
          for (const auto& path : rep_scenarios)
            in.policies.push_back(posterior_policy_distribution(chain, data->observations, read_scenario(path, in.goods),
                                                                modal_assignments(chain)));
        }
      }
      const auto files = emit_report(in, rep_out);
      spdlog::info("wrote {} report files to {}", files.size(), rep_out);
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
