#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pae/graph.hpp"
#include "pae/optim.hpp"

namespace pae::ad {

/// Builds a scalar loss on a fresh graph from the current parameter values.
using LossBuilder = std::function<NodeId(Graph&)>;

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Entries probed per parameter tensor; 0 probes every entry.
  std::size_t entries_per_param = 0;
  /// Relative error denominators never drop below this.
  double floor = 1e-4;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
  /// Largest relative error per parameter tensor, in parameter order.
  std::vector<std::pair<std::string, double>> per_parameter;
  double min_relu_margin = 0.0;
  bool passed = false;
};

/// Compares reverse-mode gradients of every parameter tensor against central
/// differences. Parameters are perturbed in place and restored exactly.
GradCheckResult grad_check(ParameterList& params, const LossBuilder& build, const GradCheckOptions& options = {});

/// Retries with fresh inputs while any ReLU pre-activation sits closer than
/// `min_margin` to its kink. `make_builder(attempt)` supplies the inputs.
GradCheckResult grad_check_resampling(ParameterList& params,
                                      const std::function<LossBuilder(std::uint64_t attempt)>& make_builder,
                                      const GradCheckOptions& options = {}, double min_margin = 1e-4,
                                      std::uint64_t max_attempts = 32);

}  // namespace pae::ad
