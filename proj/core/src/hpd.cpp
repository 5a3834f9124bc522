#include "easimix/summary.hpp"

#include "easimix/types.hpp"

#include <algorithm>
#include <cmath>

namespace easimix {

std::pair<double, double> hpd_interval(std::vector<double> samples, double mass) {
  if (!(mass > 0.0 && mass < 1.0)) throw Error("HPD mass must lie in (0, 1)");
  if (samples.size() < 10) throw Error("HPD interval needs at least 10 samples");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  const auto m = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9));
  std::size_t best = 0;
  double width = samples[m - 1] - samples[0];
  for (std::size_t i = 1; i + m <= n; ++i) {
    const double w = samples[i + m - 1] - samples[i];
    if (w < width) {
      width = w;
      best = i;
    }
  }
  return {samples[best], samples[best + m - 1]};
}

double median(std::vector<double> samples) {
  if (samples.empty()) throw Error("median of an empty sample");
  const std::size_t n = samples.size();
  std::sort(samples.begin(), samples.end());
  return n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

PosteriorSummary summarize(const std::vector<double>& samples, double mass) {
  PosteriorSummary s;
  s.draw_count = samples.size();
  s.point = median(samples);
  std::tie(s.hpd_low, s.hpd_high) = hpd_interval(samples, mass);
  return s;
}

}  // namespace easimix
