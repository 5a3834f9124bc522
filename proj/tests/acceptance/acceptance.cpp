// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "easimix/analytics.hpp"
#include "easimix/bayes_factor.hpp"
#include "easimix/chain_io.hpp"
#include "easimix/config.hpp"
#include "easimix/gibbs.hpp"
#include "easimix/gram.hpp"
#include "easimix/policy.hpp"
#include "easimix/synthgen.hpp"
#include "easimix/truncated_normal.hpp"
#include "support/oracles.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

using namespace easimix;
namespace fs = std::filesystem;

namespace {

// Criterion 1
constexpr double kCollapseTolerance = 1e-12;
constexpr int kCollapsePoints = 200;
// Criterion 2
constexpr int kGramInstances = 100;
constexpr int kGramObservations = 50;
constexpr double kGramTolerance = 1e-10;
// Criterion 3
constexpr int kTruncatedDraws = 100000;
constexpr double kHalfNormalTolerance = 0.01;
constexpr double kMonteCarloSes = 3.0;
// Criterion 5
constexpr int kRecoverySeeds = 10;
constexpr int kRecoveryObservations = 1000;
constexpr long kRecoverySweeps = 15000;
constexpr long kRecoveryBurnIn = 5000;
constexpr long kRecoveryThin = 10;
constexpr double kMinCoverage = 0.80;
constexpr double kMaxOwnPriceError = 0.15;
constexpr int kMinElasticitySeeds = 8;
constexpr double kMinAccuracy = 0.90;
// Criterion 6
constexpr int kFdPoints = 50;
constexpr double kFdTolerance = 1e-4;
constexpr double kFdFloor = 1e-3;
// Criterion 7
constexpr double kOffsetLow = 126.0;
constexpr double kOffsetHigh = 128.0;
// Criterion 8
constexpr int kBfSeeds = 10;
constexpr int kBfObservations = 500;
constexpr long kBfSweeps = 4000;
constexpr long kBfBurnIn = 1000;
constexpr long kBfThin = 3;
constexpr double kBfThreshold = 2.0;
constexpr int kMinBfSeeds = 8;
// Criterion 9
constexpr int kRegularityObservations = 5000;
constexpr double kMinRegularShare = 0.99;
// Criterion 10
constexpr long kPipelineSweeps = 3000;
constexpr long kPipelineBurnIn = 1000;
constexpr long kPipelineThin = 5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

template <typename... Args>
std::string fmtn(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vec random_vec(int n, StreamRng& rng, double sd = 1.0) {
  Vec v(n);
  for (int k = 0; k < n; ++k) v(k) = sd * rng.normal();
  return v;
}

Dimensions goods3(int degree, int mp, int m, int my) {
  Dimensions d;
  d.goods = 3;
  d.degree = degree;
  d.price_covariates = mp;
  d.demographics = m;
  d.utility_covariates = my;
  return d;
}

EvaluationPoint interior_point(const Dimensions& d, const FullCoefficients& full, StreamRng& rng) {
  EvaluationPoint at;
  at.log_prices = random_vec(d.goods, rng, 0.3);
  at.log_expenditure = 0.5 * rng.normal();
  at.h = random_vec(d.demographics, rng);
  at.h_p = random_vec(d.price_covariates, rng);
  at.h_y = random_vec(d.utility_covariates, rng);
  oracle::solve_demand(full, at.log_prices, at.log_expenditure, at.h, at.h_p, at.h_y, &at.shares);
  return at;
}

Outcome unit_elastic_collapse() {
  Dimensions d = goods3(2, 1, 1, 1);
  double worst = 0.0;
  for (int t = 0; t < kCollapsePoints; ++t) {
    StreamRng rng(100 + t);
    EasiCoefficients c = EasiCoefficients::zero(d);
    c.b[0] = random_vec(2, rng, 0.05);
    c.b[0] += (Vec(2) << 0.4, 0.3).finished();
    c.C = random_vec(2, rng, 0.02);
    const FullCoefficients f = complete_system(c, d);
    const EvaluationPoint at = interior_point(d, f, rng);
    const ElasticitySet e = elasticities(f, at);
    worst = std::max(worst, (e.marshallian + Mat::Identity(3, 3)).cwiseAbs().maxCoeff());
  }
  return {worst < kCollapseTolerance, fmt("max |M + I| = %.3g", worst)};
}

Outcome kronecker_accumulation() {
  double worst = 0.0;
  int instances = 0;
  for (int t = 0; t < kGramInstances; ++t) {
    StreamRng rng(200 + t);
    Dimensions d;
    d.goods = 3 + t % 2;
    d.price_covariates = (t / 2) % 3;
    d.demographics = 1;
    d.instruments = 2;
    d.symmetric = t % 4 < 2;
    const KroneckerLayout layout = t % 5 == 4 ? KroneckerLayout::for_gamma(d) : KroneckerLayout::for_beta(d);
    const int q = layout.equations;
    Mat rows(kGramObservations, layout.rows), targets(kGramObservations, q);
    for (int i = 0; i < kGramObservations; ++i) {
      rows.row(i) = random_vec(layout.rows, rng).transpose();
      targets.row(i) = random_vec(q, rng).transpose();
    }
    Mat a(q, q);
    for (int i = 0; i < q; ++i) a.row(i) = random_vec(q, rng).transpose();
    const Mat weight = a * a.transpose() + Mat::Identity(q, q);
    const GramResult fast = weighted_gram(rows, targets, weight, layout);
    const GramResult slow = oracle::naive_gram(rows, targets, weight, layout);
    worst = std::max(worst, (fast.matrix - slow.matrix).norm() / slow.matrix.norm());
    worst = std::max(worst, (fast.vector - slow.vector).norm() / slow.vector.norm());
    ++instances;
  }
  return {worst < kGramTolerance, fmtn("%d instances, max relative error %.3g", instances, worst)};
}

Outcome truncated_normal() {
  StreamRng rng(300);
  double sum = 0.0;
  for (int k = 0; k < kTruncatedDraws; ++k) sum += sample_truncated_mvn(Vec::Zero(1), Mat::Identity(1, 1), rng)(0);
  const double mean1 = sum / kTruncatedDraws;
  const double target = -std::sqrt(2.0 / M_PI);
  bool pass = std::abs(mean1 - target) < kHalfNormalTolerance;

  Vec mean(2);
  mean << 0.3, -0.2;
  Mat cov(2, 2);
  cov << 1.0, 0.6, 0.6, 0.8;
  std::vector<Vec> gibbs(kTruncatedDraws);
  for (auto& v : gibbs) v = sample_truncated_mvn(mean, cov, rng);
  StreamRng oracle_rng(301);
  const std::vector<Vec> reference = oracle::rejection_orthant(mean, cov, kTruncatedDraws, oracle_rng);

  auto moments = [](const std::vector<Vec>& xs) {
    // x1, x2, x1^2, x2^2, x1 x2 per draw
    Mat m(xs.size(), 5);
    for (std::size_t i = 0; i < xs.size(); ++i)
      m.row(i) << xs[i](0), xs[i](1), xs[i](0) * xs[i](0), xs[i](1) * xs[i](1), xs[i](0) * xs[i](1);
    return m;
  };
  const Mat a = moments(gibbs), b = moments(reference);
  double worst_z = 0.0;
  for (int c = 0; c < 5; ++c) {
    const double ma = a.col(c).mean(), mb = b.col(c).mean();
    const double va = (a.col(c).array() - ma).square().sum() / (a.rows() - 1);
    const double vb = (b.col(c).array() - mb).square().sum() / (b.rows() - 1);
    const double se = std::sqrt(va / a.rows() + vb / b.rows());
    worst_z = std::max(worst_z, std::abs(ma - mb) / se);
  }
  pass = pass && worst_z < kMonteCarloSes;
  return {pass, fmtn("k=1 mean %.4f vs %.4f; k=2 max moment gap %.2f SE", mean1, target, worst_z)};
}

Outcome conjugacy_fixed_point() {
  GroundTruth truth = reference_truth(ReferenceDesign::TwoCluster, 1);
  const Dataset data = generate_population(truth, 0).data;
  const PriorHyperparams prior = PriorHyperparams::defaults(data.dims);
  ChainSettings settings;
  settings.sweeps = 2;
  settings.burn_in = 0;
  settings.thin = 1;
  GibbsSampler sampler(data, prior, settings);
  SamplerState state = sampler.initial_state();
  SweepHyperparameters rec;
  sampler.sweep(state, 1, &rec);
  bool ok = rec.gamma.mean == prior.gamma_mean && rec.gamma.cov == prior.gamma_cov && rec.dirichlet == prior.alpha &&
            rec.covariance.scale_uu == prior.scale_uu &&
            rec.covariance.nu_uu == prior.nu_uu - data.dims.modeled();
  for (int j = 0; j < prior.clusters(); ++j)
    ok = ok && rec.beta[j].mean == prior.beta_mean[j] && rec.beta[j].cov == prior.beta_cov[j] &&
         rec.covariance.nu[j] == prior.nu[j] && rec.covariance.scale[j] == prior.scale_eps[j] &&
         rec.covariance.reg_mean[j] == prior.reg_mean[j] && rec.covariance.reg_row_cov[j] == prior.reg_row_cov[j];
  return {ok, ok ? "all conditional hyperparameters equal the prior" : "a hyperparameter moved with n = 0"};
}

Outcome synthetic_recovery() {
  int covered = 0, total = 0, elasticity_ok = 0;
  double min_accuracy = 1.0, min_cov = 1.0;
  for (int seed = 1; seed <= kRecoverySeeds; ++seed) {
    const auto start = std::chrono::steady_clock::now();
    const GroundTruth truth = reference_truth(ReferenceDesign::TwoCluster, seed);
    const SyntheticSample sample = generate_population(truth, kRecoveryObservations);
    ChainSettings s;
    s.sweeps = kRecoverySweeps;
    s.burn_in = kRecoveryBurnIn;
    s.thin = kRecoveryThin;
    s.seed = seed;
    const Chain chain = run_chain(sample.data, PriorHyperparams::defaults(sample.data.dims), s);
    const RecoveryReport r = recovery_report(truth, chain, sample.labels, representative_point(sample.data));
    for (const auto& p : r.parameters) covered += p.covered;
    total += static_cast<int>(r.parameters.size());
    elasticity_ok += r.max_own_price_error <= kMaxOwnPriceError;
    min_accuracy = std::min(min_accuracy, r.assignment_accuracy);
    min_cov = std::min(min_cov, r.coverage);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("  seed %2d: censoring %.3f coverage %.3f accuracy %.3f max own-price error %.3f (%.0f s)\n", seed,
                sample.censoring_rate, r.coverage, r.assignment_accuracy, r.max_own_price_error, secs);
    std::fflush(stdout);
  }
  const double coverage = static_cast<double>(covered) / total;
  const bool pass = coverage >= kMinCoverage && elasticity_ok >= kMinElasticitySeeds && min_accuracy >= kMinAccuracy;
  return {pass, fmtn("pooled coverage %.3f (min seed %.3f), elasticities within 15%% in %d/%d seeds, min accuracy %.3f",
                     coverage, min_cov, elasticity_ok, kRecoverySeeds, min_accuracy)};
}

Outcome finite_differences() {
  int checked = 0;
  double worst = 0.0;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(kFdFloor, std::abs(b)); };
  for (std::uint64_t seed = 1; checked < kFdPoints; ++seed) {
    const Dimensions d = goods3(2, 1, 1, 1);
    StreamRng rng(600 + seed);
    const FullCoefficients f = complete_system(oracle::random_coefficients(d, rng, 0.03), d);
    const EvaluationPoint at = interior_point(d, f, rng);
    if ((at.shares.array() < 0.05).any()) continue;
    ++checked;
    const ElasticitySet e = elasticities(f, at);
    const auto fd = oracle::fd_elasticities(f, at.log_prices, at.log_expenditure, at.h, at.h_p, at.h_y);
    for (int l = 0; l < 3; ++l) {
      worst = std::max(worst, rel(e.income(l), fd.income(l)));
      for (int j = 0; j < 3; ++j) {
        worst = std::max(worst, rel(e.marshallian(l, j), fd.marshallian(l, j)));
        worst = std::max(worst, rel(e.hicksian(l, j), fd.hicksian(l, j)));
      }
    }
  }
  return {worst < kFdTolerance, fmtn("%d points, max relative error %.3g", checked, worst)};
}

Outcome ev_pipeline() {
  const GroundTruth truth = reference_truth(ReferenceDesign::TwoCluster, 1);
  const SyntheticSample sample = generate_population(truth, 200);
  std::vector<FullCoefficients> clusters;
  for (const auto& c : truth.coeffs) clusters.push_back(complete_system(c, truth.dims));
  Scenario identity;
  identity.price_multipliers = Vec::Ones(3);
  const PolicyOutcome id = evaluate_policy(sample.data.observations, identity, clusters, sample.labels);
  const double q = quantity_change(-1.0, 0.5);
  const OffsetUsers off = users_for_offset(-126.76e6, 157.0, 633490.0);
  const bool pass = id.ev_annual == 0.0 && q == 1.0 && off.pct_change >= kOffsetLow && off.pct_change <= kOffsetHigh;
  return {pass, fmtn("identity EV %.17g, quantity change %.17g, users for offset %.2f%%", id.ev_annual, q,
                     off.pct_change)};
}

Outcome bayes_factor_direction() {
  auto run = [](ReferenceDesign design, int seed) {
    GroundTruth truth = reference_truth(design, seed);
    Dataset data = generate_population(truth, kBfObservations).data;
    data.dims.symmetric = false;
    ChainSettings s;
    s.sweeps = kBfSweeps;
    s.burn_in = kBfBurnIn;
    s.thin = kBfThin;
    s.seed = seed;
    const Chain chain = run_chain(data, PriorHyperparams::defaults(data.dims), s);
    return bayes_factor_symmetry(chain);
  };
  int sym_ok = 0, asym_ok = 0;
  std::string sym_values, asym_values;
  for (int seed = 1; seed <= kBfSeeds; ++seed) {
    const BayesFactor a = run(ReferenceDesign::Symmetric, seed);
    const BayesFactor b = run(ReferenceDesign::Asymmetric, seed);
    sym_ok += a.kind != BayesFactor::Kind::Indeterminate && a.kind != BayesFactor::Kind::UpperBound &&
              a.two_log_bf > kBfThreshold;
    asym_ok += b.kind != BayesFactor::Kind::Indeterminate && b.kind != BayesFactor::Kind::LowerBound &&
               b.two_log_bf < -kBfThreshold;
    sym_values += (seed > 1 ? " " : "") + a.text();
    asym_values += (seed > 1 ? " " : "") + b.text();
  }
  std::printf("  symmetric truth 2 log BF: %s\n  asymmetric truth 2 log BF: %s\n", sym_values.c_str(),
              asym_values.c_str());
  return {sym_ok >= kMinBfSeeds && asym_ok >= kMinBfSeeds,
          fmtn("symmetric > 2 in %d/%d seeds, asymmetric < -2 in %d/%d seeds", sym_ok, kBfSeeds, asym_ok, kBfSeeds)};
}

Outcome regularity() {
  int regular = 0, total = 0;
  for (ReferenceDesign design : {ReferenceDesign::TwoCluster, ReferenceDesign::Symmetric}) {
    const GroundTruth truth = reference_truth(design, 9);
    const SyntheticSample sample = generate_population(truth, kRegularityObservations);
    std::vector<FullCoefficients> full;
    for (const auto& c : truth.coeffs) full.push_back(complete_system(c, truth.dims));
    for (int i = 0; i < sample.data.size(); ++i) {
      const Regularity r = check_regularity(full[sample.labels[i]], sample.data.observations[i], sample.y(i));
      regular += r.monotonic && r.concave;
      ++total;
    }
  }
  const double share = static_cast<double>(regular) / total;
  return {share >= kMinRegularShare, fmtn("%d/%d observations regular (%.4f)", regular, total, share)};
}

bool chains_identical(const Chain& a, const Chain& b) {
  if (a.snapshots.size() != b.snapshots.size() || a.log_likelihood != b.log_likelihood || a.occupancy != b.occupancy)
    return false;
  for (std::size_t t = 0; t < a.snapshots.size(); ++t) {
    const SamplerState& x = a.snapshots[t];
    const SamplerState& y = b.snapshots[t];
    if (x.beta != y.beta || x.gamma != y.gamma || x.sigma != y.sigma || x.psi != y.psi || x.phi != y.phi) return false;
  }
  return true;
}

int run_cli(const std::string& cli, const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + cli + "\" --log-level warn " + args + " > \"" + log.string() + "\" 2>&1";
  return std::system(cmd.c_str());
}

Outcome reproducibility(const std::string& cli, const fs::path& work) {
  std::string detail;
  const GroundTruth truth = reference_truth(ReferenceDesign::TwoCluster, 1);
  const SyntheticSample sample = generate_population(truth, kRecoveryObservations);
  ChainSettings s;
  s.sweeps = 400;
  s.burn_in = 100;
  s.thin = 3;
  s.seed = 42;
  const PriorHyperparams prior = PriorHyperparams::defaults(sample.data.dims);
  const Chain a = run_chain(sample.data, prior, s);
  const Chain b = run_chain(sample.data, prior, s);
  const bool same = chains_identical(a, b);
  detail += same ? "fixed-seed runs identical" : "fixed-seed runs differ";

  fs::create_directories(work);
  persist_chain(a, (work / "roundtrip").string());
  const bool round_trip = chains_identical(a, load_chain((work / "roundtrip").string()));
  detail += round_trip ? "; round trip exact" : "; round trip differs";

  bool pipeline = false;
  if (cli.empty() || !fs::exists(cli)) {
    detail += "; command-line tool not built";
  } else {
    const fs::path sim = work / "simulate", est = work / "estimate", rep = work / "report";
    fs::remove_all(sim);
    fs::remove_all(est);
    fs::remove_all(rep);
    fs::create_directories(sim);
    write_text_file((work / "truth.json").string(), truth_to_json(truth));
    RunConfig config;
    config.sampler.sweeps = kPipelineSweeps;
    config.sampler.burn_in = kPipelineBurnIn;
    config.sampler.thin = kPipelineThin;
    write_text_file((work / "config.json").string(), config_to_json(config));
    Scenario sc;
    sc.name = "halved";
    sc.price_multipliers = (Vec(3) << 0.5, 1.0, 1.0).finished();
    sc.tax_per_unit = 0.1;
    sc.marginal_cost_per_unit = 0.2;
    write_text_file((work / "scenario.json").string(), scenario_to_json(sc, truth.goods));

    const std::vector<std::pair<std::string, std::string>> steps{
        {"simulate", "simulate --truth \"" + (work / "truth.json").string() + "\" --n " +
                         std::to_string(kRecoveryObservations) + " --out \"" + sim.string() + "\""},
        {"estimate", "--seed 7 estimate --data \"" + (sim / "data.csv").string() + "\" --manifest \"" +
                         (sim / "data.json").string() + "\" --config \"" + (work / "config.json").string() +
                         "\" --out \"" + est.string() + "\""},
        {"elasticities", "elasticities --chain \"" + est.string() + "\" --at mean --out \"" +
                             (work / "elasticities.csv").string() + "\""},
        {"counterfactual", "counterfactual --chain \"" + est.string() + "\" --scenario \"" +
                               (work / "scenario.json").string() + "\" --population sample --out \"" +
                               (work / "counterfactual.json").string() + "\""},
        {"report", "report --chain \"" + est.string() + "\" --out-dir \"" + rep.string() + "\" --scenario \"" +
                       (work / "scenario.json").string() + "\""},
    };
    pipeline = true;
    for (const auto& [name, args] : steps) {
      const int rc = run_cli(cli, args, work / (name + ".log"));
      if (rc != 0) {
        detail += "; " + name + " failed (see " + (work / (name + ".log")).string() + ")";
        pipeline = false;
        break;
      }
    }
    if (pipeline) {
      for (const fs::path& p : {sim / "data.csv", est / "chain.bin", work / "elasticities.csv",
                                work / "counterfactual.json", rep / "index.csv"})
        if (!fs::exists(p) || fs::file_size(p) == 0) {
          detail += "; missing " + p.string();
          pipeline = false;
        }
    }
    if (pipeline) detail += "; command-line pipeline complete";
  }
  return {same && round_trip && pipeline, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::string cli;
  std::string work = (fs::temp_directory_path() / "easimix_acceptance").string();
  std::vector<int> only;
  app.add_option("--cli", cli, "path to the easimix executable");
  app.add_option("--work", work, "scratch directory");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"unit-elastic collapse", unit_elastic_collapse},
      {"Kronecker accumulation", kronecker_accumulation},
      {"truncated-normal correctness", truncated_normal},
      {"conjugacy fixed point", conjugacy_fixed_point},
      {"synthetic recovery", synthetic_recovery},
      {"finite-difference elasticities", finite_differences},
      {"EV pipeline", ev_pipeline},
      {"Bayes-factor direction", bayes_factor_direction},
      {"regularity checks", regularity},
      {"reproducibility and I/O", [&] { return reproducibility(cli, work); }},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d %s  %s: %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
