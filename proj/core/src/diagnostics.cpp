#include "easimix/diagnostics.hpp"

#include <cmath>
#include <sstream>

namespace easimix {

namespace {

struct ParamRef {
  enum Kind { Beta, Gamma, Sigma, Phi } kind;
  int j = 0, k = 0, r = 0, c = 0;
};

double value_of(const SamplerState& s, const ParamRef& p) {
  switch (p.kind) {
    case ParamRef::Beta: return s.beta[p.j](p.k);
    case ParamRef::Gamma: return s.gamma(p.k);
    case ParamRef::Sigma: return s.sigma[p.j](p.r, p.c);
    case ParamRef::Phi: return s.phi(p.j);
  }
  return 0.0;
}

std::vector<std::pair<std::string, ParamRef>> catalog(const Chain& chain) {
  const Dimensions& d = chain.dims;
  std::vector<std::pair<std::string, ParamRef>> out;
  auto idx = [](int v) { return std::to_string(v + 1); };
  for (int j = 0; j < d.clusters; ++j)
    for (int k = 0; k < d.beta_dim(); ++k)
      out.push_back({"beta[" + idx(j) + "][" + idx(k) + "]", {ParamRef::Beta, j, k}});
  for (int k = 0; k < d.gamma_dim(); ++k) out.push_back({"gamma[" + idx(k) + "]", {ParamRef::Gamma, 0, k}});
  for (int j = 0; j < d.clusters; ++j)
    for (int r = 0; r < d.error_dim(); ++r)
      for (int c = r; c < d.error_dim(); ++c)
        out.push_back({"sigma[" + idx(j) + "][" + idx(r) + "," + idx(c) + "]", {ParamRef::Sigma, j, 0, r, c}});
  for (int j = 0; j < d.clusters; ++j) out.push_back({"phi[" + idx(j) + "]", {ParamRef::Phi, j}});
  return out;
}

std::vector<double> series_of(const Chain& chain, const ParamRef& p) {
  std::vector<double> out;
  out.reserve(chain.snapshots.size());
  for (const auto& s : chain.snapshots) out.push_back(value_of(s, p));
  return out;
}

}  // namespace

std::vector<std::string> parameter_names(const Chain& chain) {
  std::vector<std::string> names;
  for (auto& [name, ref] : catalog(chain)) names.push_back(name);
  return names;
}

std::vector<double> parameter_trace(const Chain& chain, const std::string& name) {
  for (auto& [n, ref] : catalog(chain))
    if (n == name) return series_of(chain, ref);
  throw Error("unknown parameter '" + name + "'");
}

bool wildcard_match(const std::string& pattern, const std::string& text) {
  std::size_t p = 0, t = 0, star = std::string::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

std::vector<double> autocorrelation(const std::vector<double>& series, int max_lag) {
  const auto n = static_cast<int>(series.size());
  if (n < 2) throw Error("autocorrelation needs at least two draws");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= n;
  double c0 = 0.0;
  for (double v : series) c0 += (v - mean) * (v - mean);
  const int lags = std::min(max_lag, n - 1);
  std::vector<double> acf(lags + 1, 0.0);
  if (c0 == 0.0) {
    acf[0] = 1.0;
    return acf;
  }
  for (int k = 0; k <= lags; ++k) {
    double ck = 0.0;
    for (int t = 0; t + k < n; ++t) ck += (series[t] - mean) * (series[t + k] - mean);
    acf[k] = ck / c0;
  }
  return acf;
}

EssEstimate effective_sample_size(const std::vector<double>& series) {
  const auto n = static_cast<int>(series.size());
  if (n < 4) throw Error("effective sample size needs at least four draws");
  EssEstimate out;
  double lo = series.front(), hi = series.front();
  for (double v : series) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) {
    out.degenerate = true;
    return out;
  }
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= n;
  std::vector<double> centered(n);
  for (int t = 0; t < n; ++t) centered[t] = series[t] - mean;
  double c0 = 0.0;
  for (double v : centered) c0 += v * v;
  auto rho = [&](int k) {
    double ck = 0.0;
    for (int t = 0; t + k < n; ++t) ck += centered[t] * centered[t + k];
    return ck / c0;
  };
  double tau = -1.0;
  for (int m = 0; 2 * m + 1 < n; ++m) {
    const double pair = rho(2 * m) + rho(2 * m + 1);
    if (!(pair > 0.0)) break;
    tau += 2.0 * pair;
  }
  out.ess = n / std::max(tau, 1e-12);
  return out;
}

std::vector<ParameterDiagnostics> chain_diagnostics(const Chain& chain, const std::string& selector,
                                                    int max_lag) {
  if (chain.snapshots.size() < 50) throw Error("diagnostics need at least 50 retained draws");
  std::vector<std::string> patterns;
  std::stringstream ss(selector);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) patterns.push_back(item);
  std::vector<ParameterDiagnostics> out;
  for (auto& [name, ref] : catalog(chain)) {
    bool hit = false;
    for (const auto& p : patterns) hit = hit || wildcard_match(p, name);
    if (!hit) continue;
    ParameterDiagnostics d;
    d.name = name;
    d.trace = series_of(chain, ref);
    d.acf = autocorrelation(d.trace, max_lag);
    d.ess = effective_sample_size(d.trace);
    out.push_back(std::move(d));
  }
  if (out.empty()) throw Error("parameter selector '" + selector + "' matches nothing");
  return out;
}

}  // namespace easimix
