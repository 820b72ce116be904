#pragma once

#include <span>
#include <vector>

#include "pae/pose.hpp"

namespace pae {

struct PoseError {
  double position_m = 0.0;
  double orientation_deg = 0.0;
};

struct MedianReport {
  double position_m = 0.0;
  double orientation_deg = 0.0;
  std::size_t count = 0;
};

/// Median with midpoint interpolation for even counts. Throws on empty input.
double median(std::span<const double> values);

MedianReport median_report(std::span<const PoseError> errors);

PoseError pose_error(const Pose& estimate, const Pose& truth);

}  // namespace pae
