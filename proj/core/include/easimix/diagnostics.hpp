#pragma once

#include "easimix/gibbs.hpp"

#include <string>
#include <vector>

namespace easimix {

inline constexpr int kDefaultMaxLag = 50;

/// Names of scalar chain parameters, indices 1-based: beta[j][k], gamma[k],
/// sigma[j][r,c] (r <= c), phi[j].
std::vector<std::string> parameter_names(const Chain& chain);

/// Retained-draw series of one named parameter.
std::vector<double> parameter_trace(const Chain& chain, const std::string& name);

/// Wildcard match supporting '*' and '?'; brackets are literal.
bool wildcard_match(const std::string& pattern, const std::string& text);

/// Sample autocorrelations for lags 0..max_lag (capped at n - 1).
std::vector<double> autocorrelation(const std::vector<double>& series, int max_lag = kDefaultMaxLag);

struct EssEstimate {
  double ess = 0.0;
  bool degenerate = false;  // zero-variance series; ess is reported as 0
};

/// Effective sample size with Geyer's initial positive sequence truncation.
EssEstimate effective_sample_size(const std::vector<double>& series);

struct ParameterDiagnostics {
  std::string name;
  std::vector<double> trace;
  std::vector<double> acf;
  EssEstimate ess;
};

/// Diagnostics for every parameter whose name matches one of the
/// comma-separated patterns in `selector`. Needs at least 50 retained draws.
std::vector<ParameterDiagnostics> chain_diagnostics(const Chain& chain, const std::string& selector,
                                                    int max_lag = kDefaultMaxLag);

}  // namespace easimix
