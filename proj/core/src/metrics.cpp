#include "pae/metrics.hpp"

#include <algorithm>

#include "pae/error.hpp"

namespace pae {

double median(std::span<const double> values) {
  if (values.empty()) throw ValidationError("median of an empty list");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

MedianReport median_report(std::span<const PoseError> errors) {
  if (errors.empty()) throw ValidationError("median_report: no errors given");
  std::vector<double> pos, ang;
  pos.reserve(errors.size());
  ang.reserve(errors.size());
  for (const auto& e : errors) {
    pos.push_back(e.position_m);
    ang.push_back(e.orientation_deg);
  }
  return {median(pos), median(ang), errors.size()};
}

PoseError pose_error(const Pose& estimate, const Pose& truth) {
  return {distance(estimate.x, truth.x), angular_error_deg(estimate.q, truth.q)};
}

}  // namespace pae
