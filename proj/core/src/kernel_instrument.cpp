#include "easimix/kernel_instrument.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace easimix {

Vec kernel_instrument(const Mat& consumers, const Mat& events, const Vec& values, double bandwidth_m,
                      KernelMode mode) {
  if (!(bandwidth_m > 0.0) || !std::isfinite(bandwidth_m)) throw Error("kernel_instrument: bandwidth must be positive");
  if (consumers.cols() != 2 || events.cols() != 2) throw DimensionError("kernel_instrument: points need (x, y) columns");
  if (mode == KernelMode::Average && values.size() != events.rows())
    throw DimensionError("kernel_instrument: one value per event is required");
  const double inv = 1.0 / (2.0 * bandwidth_m * bandwidth_m);
  Vec out(consumers.rows());
  std::vector<std::pair<double, double>> terms(static_cast<std::size_t>(events.rows()));
  for (Eigen::Index i = 0; i < consumers.rows(); ++i) {
    for (Eigen::Index k = 0; k < events.rows(); ++k) {
      const double dx = consumers(i, 0) - events(k, 0);
      const double dy = consumers(i, 1) - events(k, 1);
      const double w = std::exp(-(dx * dx + dy * dy) * inv);
      terms[k] = {w, mode == KernelMode::Average ? values(k) : 1.0};
    }
    // Summing in sorted order makes the result independent of event order.
    std::sort(terms.begin(), terms.end());
    double num = 0.0, den = 0.0;
    bool supported = false;
    for (const auto& [w, v] : terms) {
      num += w * v;
      den += w;
      supported = supported || w >= kKernelSupportFloor;
    }
    if (mode == KernelMode::Count) out(i) = den;
    else out(i) = supported ? num / den : kMissingValue;
  }
  return out;
}

}  // namespace easimix
