#include "easimix/report.hpp"

#include "easimix/config.hpp"
#include "easimix/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <sstream>

namespace easimix {

namespace {

namespace fs = std::filesystem;

constexpr std::size_t kMinSummaryDraws = 10;
constexpr std::size_t kMinDiagnosticDraws = 50;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

class Csv {
public:
  explicit Csv(std::vector<std::string> header) { row(header); }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) out_ << (c ? "," : "") << quote(cells[c]);
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

private:
  std::ostringstream out_;
};

class Emitter {
public:
  explicit Emitter(std::string dir) : dir_(std::move(dir)) {}
  void file(const std::string& name, const std::string& kind, const std::string& description, const std::string& body) {
    write_text_file((fs::path(dir_) / name).string(), body);
    index_.push_back({name, kind, description});
  }
  void stub(const std::string& name, const std::string& kind, const std::string& description) {
    file(name, kind, description, "status\nno draws\n");
  }
  const std::vector<ReportFile>& index() const { return index_; }

private:
  std::string dir_;
  std::vector<ReportFile> index_;
};

std::string good_name(const ReportInputs& in, int l) {
  return l < static_cast<int>(in.goods.size()) ? in.goods[l] : "good" + std::to_string(l + 1);
}

// Gaussian KDE on an even grid spanning the draws plus three bandwidths.
std::vector<std::pair<double, double>> density_grid(const std::vector<double>& x, int points) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / (n - 1.0));
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  std::vector<std::pair<double, double>> out;
  if (!(sd > 0.0)) {
    out.push_back({*lo_it, 0.0});
    return out;
  }
  const double bw = 1.06 * sd * std::pow(n, -0.2);
  const double lo = *lo_it - 3.0 * bw, hi = *hi_it + 3.0 * bw;
  const double norm = 1.0 / (n * bw * std::sqrt(2.0 * std::numbers::pi));
  for (int g = 0; g < points; ++g) {
    const double t = lo + (hi - lo) * g / (points - 1);
    double dens = 0.0;
    for (double v : x) {
      const double u = (t - v) / bw;
      dens += std::exp(-0.5 * u * u);
    }
    out.push_back({t, dens * norm});
  }
  return out;
}

void write_matrix_table(Emitter& em, const ReportInputs& in, const std::string& name, const std::string& desc,
                        const MatrixSummary& m, bool column_goods) {
  std::vector<std::string> header{"good"};
  if (column_goods)
    for (int c = 0; c < m.cols; ++c) header.push_back(good_name(in, c));
  else
    header.push_back("value");
  Csv csv(header);
  for (int r = 0; r < m.rows; ++r) {
    std::vector<std::string> row{good_name(in, r)};
    for (int c = 0; c < m.cols; ++c) row.push_back(format_cell(m(r, c)));
    csv.row(row);
  }
  em.file(name, "table", desc, csv.str());
}

}  // namespace

std::string format_cell(const PosteriorSummary& s, int precision) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.*f (%.*f, %.*f)", precision, s.point, precision, s.hpd_low, precision, s.hpd_high);
  return buf;
}

std::vector<ReportFile> emit_report(const ReportInputs& in, const std::string& out_dir) {
  if (!in.chain) throw Error("emit_report: a chain is required");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create report directory " + out_dir);
  const Chain& chain = *in.chain;
  const std::size_t draws = chain.snapshots.size();
  const int J = chain.dims.clusters;
  Emitter em(out_dir);

  // Per-sweep traces exist even when nothing was retained.
  {
    Csv ll({"sweep", "log_likelihood"});
    for (std::size_t t = 0; t < chain.log_likelihood.size(); ++t)
      ll.row({std::to_string(t + 1), num(chain.log_likelihood[t])});
    em.file("log_likelihood.csv", "series", "audit log-likelihood per sweep", ll.str());
    std::vector<std::string> header{"sweep"};
    for (int j = 0; j < J; ++j) header.push_back("cluster" + std::to_string(j + 1));
    Csv occ(header);
    for (std::size_t t = 0; J > 0 && t < chain.occupancy.size() / J; ++t) {
      std::vector<std::string> row{std::to_string(t + 1)};
      for (int j = 0; j < J; ++j) row.push_back(std::to_string(chain.occupancy[t * J + j]));
      occ.row(row);
    }
    em.file("occupancy.csv", "series", "cluster sizes per sweep", occ.str());
  }

  if (draws < kMinSummaryDraws) {
    em.stub("parameters.csv", "table", "posterior summaries of chain parameters");
    em.stub("trace.csv", "series", "retained draws per parameter");
    em.stub("acf.csv", "series", "autocorrelation per parameter");
    em.stub("density.csv", "series", "posterior density grid per parameter");
    em.stub("sigma_correlations.csv", "table", "error correlations");
    for (int j = 0; j < J; ++j) {
      const std::string c = std::to_string(j + 1);
      em.stub("elasticities_marshallian_cluster" + c + ".csv", "table", "Marshallian price elasticities");
      em.stub("elasticities_hicksian_cluster" + c + ".csv", "table", "Hicksian price elasticities");
      em.stub("elasticities_income_cluster" + c + ".csv", "table", "expenditure elasticities");
      if (in.data) em.stub("engel_cluster" + c + ".csv", "series", "Engel curve grid");
    }
    for (const auto& p : in.policies) em.stub("policy_" + p.scenario + ".csv", "table", "policy summaries");
  } else {
    // Parameter summaries, traces, ACF and densities.
    std::vector<std::string> names;
    const std::vector<std::string> all = parameter_names(chain);
    std::vector<std::string> patterns;
    {
      std::stringstream ss(in.parameters);
      std::string p;
      while (std::getline(ss, p, ','))
        if (!p.empty()) patterns.push_back(p);
    }
    for (const auto& n : all)
      if (std::any_of(patterns.begin(), patterns.end(), [&](const std::string& p) { return wildcard_match(p, n); }))
        names.push_back(n);
    Csv params({"parameter", "median", "hpd_low", "hpd_high", "ess", "summary"});
    Csv trace({"parameter", "draw", "value"});
    Csv acf({"parameter", "lag", "value"});
    Csv dens({"parameter", "x", "density"});
    for (const auto& name : names) {
      const std::vector<double> t = parameter_trace(chain, name);
      const PosteriorSummary s = summarize(t, in.mass);
      std::string ess = "NA";
      if (draws >= kMinDiagnosticDraws) {
        const EssEstimate e = effective_sample_size(t);
        ess = num(e.ess);
        const std::vector<double> rho = autocorrelation(t);
        for (std::size_t k = 0; k < rho.size(); ++k) acf.row({name, std::to_string(k), num(rho[k])});
      }
      params.row({name, num(s.point), num(s.hpd_low), num(s.hpd_high), ess, format_cell(s)});
      for (std::size_t k = 0; k < t.size(); ++k) trace.row({name, std::to_string(k + 1), num(t[k])});
      for (const auto& [x, f] : density_grid(t, in.density_points)) dens.row({name, num(x), num(f)});
    }
    em.file("parameters.csv", "table", "posterior medians and HPD intervals of chain parameters", params.str());
    em.file("trace.csv", "series", "retained draws per parameter", trace.str());
    em.file("acf.csv", "series", "autocorrelation per parameter", acf.str());
    em.file("density.csv", "series", "posterior density grid per parameter", dens.str());

    // Error correlations: median and HPD of each draw's correlation.
    Csv corr({"cluster", "row", "col", "median", "hpd_low", "hpd_high", "summary"});
    const int k = chain.dims.error_dim();
    for (int j = 0; j < J; ++j)
      for (int r = 0; r < k; ++r)
        for (int c = r + 1; c < k; ++c) {
          std::vector<double> v;
          for (const auto& snap : chain.snapshots) {
            const Mat& S = snap.sigma[j];
            v.push_back(S(r, c) / std::sqrt(S(r, r) * S(c, c)));
          }
          const PosteriorSummary s = summarize(v, in.mass);
          corr.row({std::to_string(j + 1), std::to_string(r + 1), std::to_string(c + 1), num(s.point), num(s.hpd_low),
                    num(s.hpd_high), format_cell(s)});
        }
    em.file("sigma_correlations.csv", "table", "error correlations, median of per-draw correlations", corr.str());

    for (const auto& e : in.elasticities) {
      const std::string c = std::to_string(e.cluster + 1);
      write_matrix_table(em, in, "elasticities_marshallian_cluster" + c + ".csv", "Marshallian price elasticities",
                         e.marshallian, true);
      write_matrix_table(em, in, "elasticities_hicksian_cluster" + c + ".csv", "Hicksian price elasticities",
                         e.hicksian, true);
      write_matrix_table(em, in, "elasticities_income_cluster" + c + ".csv", "expenditure elasticities", e.income,
                         false);
    }

    if (in.data && in.data->size() > 0) {
      const Dataset& data = *in.data;
      const EvaluationPoint at = representative_point(data);
      double lo = data.observations[0].log_expenditure, hi = lo;
      for (const auto& o : data.observations) {
        lo = std::min(lo, o.log_expenditure);
        hi = std::max(hi, o.log_expenditure);
      }
      Vec grid(in.engel_points);
      for (int g = 0; g < in.engel_points; ++g)
        grid(g) = in.engel_points > 1 ? lo + (hi - lo) * g / (in.engel_points - 1) : lo;
      for (int j = 0; j < J; ++j) {
        std::vector<Mat> curves;
        for (const auto& snap : chain.snapshots)
          curves.push_back(engel_curve(complete_system(unpack(snap.beta[j], chain.dims), chain.dims), at.h, at.h_y, grid));
        const MatrixSummary m = summarize_matrices(curves, in.mass);
        std::vector<std::string> header{"y"};
        for (int l = 0; l < m.cols; ++l) {
          const std::string g = good_name(in, l);
          for (const char* suffix : {"_median", "_hpd_low", "_hpd_high"}) header.push_back(g + suffix);
        }
        Csv engel(header);
        for (int g = 0; g < m.rows; ++g) {
          std::vector<std::string> row{num(grid(g))};
          for (int l = 0; l < m.cols; ++l)
            for (double v : {m(g, l).point, m(g, l).hpd_low, m(g, l).hpd_high}) row.push_back(num(v));
          engel.row(row);
        }
        em.file("engel_cluster" + std::to_string(j + 1) + ".csv", "series", "Engel curve grid", engel.str());
      }
    }

    for (const auto& p : in.policies) {
      Csv t({"metric", "median", "hpd_low", "hpd_high", "summary"});
      auto add = [&](const std::string& name, const PosteriorSummary& s) {
        t.row({name, num(s.point), num(s.hpd_low), num(s.hpd_high), format_cell(s, 2)});
      };
      add("ev_annual", p.ev);
      add("gov_revenue", p.gov_revenue);
      add("dealer_revenue_change", p.dealer_revenue_change);
      add("dealer_profit_change", p.dealer_profit_change);
      add("new_users", p.new_users);
      add("users_for_offset_pct", p.users_for_offset_pct);
      for (std::size_t l = 0; l < p.quantity_changes.size(); ++l)
        add("quantity_change_" + good_name(in, static_cast<int>(l)), p.quantity_changes[l]);
      em.file("policy_" + p.scenario + ".csv", "table", "policy summaries for scenario " + p.scenario, t.str());
    }
  }

  Csv index({"file", "kind", "description"});
  for (const auto& f : em.index()) index.row({f.name, f.kind, f.description});
  write_text_file((fs::path(out_dir) / "index.csv").string(), index.str());
  return em.index();
}

}  // namespace easimix
