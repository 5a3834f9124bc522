#pragma once

#include "easimix/analytics.hpp"
#include "easimix/gibbs.hpp"
#include "easimix/policy.hpp"
#include "easimix/summary.hpp"

#include <optional>
#include <string>
#include <vector>

namespace easimix {

/// "median (hpd_low, hpd_high)".
std::string format_cell(const PosteriorSummary& s, int precision = 4);

struct ReportInputs {
  const Chain* chain = nullptr;
  const Dataset* data = nullptr;  // enables Engel grids and regularity shares
  std::vector<std::string> goods;
  std::vector<ElasticityPosterior> elasticities;
  std::vector<PolicySummary> policies;
  std::string parameters = "*";
  double mass = kDefaultHpdMass;
  int engel_points = 25;
  int density_points = 64;
};

struct ReportFile {
  std::string name;
  std::string kind;
  std::string description;
};

/// Writes delimited tables and plot-data series plus `index.csv`; returns the
/// index entries. A chain without draws produces "no draws" stubs.
std::vector<ReportFile> emit_report(const ReportInputs& inputs, const std::string& out_dir);

}  // namespace easimix
