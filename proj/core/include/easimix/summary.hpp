#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace easimix {

inline constexpr double kDefaultHpdMass = 0.95;

struct PosteriorSummary {
  double point = 0.0;  // median
  double hpd_low = 0.0;
  double hpd_high = 0.0;
  std::size_t draw_count = 0;
};

/// Shortest window of sorted samples holding ceil(mass * n) points; the
/// lowest such window wins ties. Needs at least 10 samples.
std::pair<double, double> hpd_interval(std::vector<double> samples, double mass = kDefaultHpdMass);

double median(std::vector<double> samples);

PosteriorSummary summarize(const std::vector<double>& samples, double mass = kDefaultHpdMass);

}  // namespace easimix
