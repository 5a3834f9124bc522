#pragma once

#include "easimix/types.hpp"

#include <limits>

namespace easimix {

enum class KernelMode {
  Average,  // sum K(d) v / sum K(d)
  Count     // sum K(d), a distance-weighted event count
};

inline constexpr double kMissingValue = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kKernelSupportFloor = 1e-300;

/// Gaussian-kernel exposure K(d) = exp(-d^2 / (2 h^2)) of each consumer to a
/// set of events. Points are rows of (x, y) in meters. In Average mode a
/// consumer whose weights all fall below the support floor gets kMissingValue.
Vec kernel_instrument(const Mat& consumers, const Mat& events, const Vec& values, double bandwidth_m,
                      KernelMode mode = KernelMode::Average);

}  // namespace easimix
