#include "pae/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pae/rng.hpp"

namespace pae::ad {

namespace {

double evaluate(const LossBuilder& build) {
  Graph g;
  return g.value(build(g)).item();
}

}  // namespace

GradCheckResult grad_check(ParameterList& params, const LossBuilder& build, const GradCheckOptions& options) {
  GradCheckResult result;
  Gradients grads;
  {
    Graph g;
    const NodeId loss = build(g);
    grads = g.backward(loss);
    result.min_relu_margin = g.min_relu_margin();
  }

  SplitMix64 rng(derive_seed(options.seed, stream::kGradCheck));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    const Tensor analytic = grads.of(p.value);

    std::vector<std::size_t> entries;
    if (options.entries_per_param == 0 || options.entries_per_param >= p.value.numel()) {
      entries.resize(p.value.numel());
      for (std::size_t j = 0; j < entries.size(); ++j) entries[j] = j;
    } else {
      for (std::size_t j = 0; j < options.entries_per_param; ++j) entries.push_back(rng.below(p.value.numel()));
    }

    double param_max = 0.0;
    for (std::size_t j : entries) {
      const double original = p.value[j];
      p.value[j] = original + options.step;
      const double plus = evaluate(build);
      p.value[j] = original - options.step;
      const double minus = evaluate(build);
      p.value[j] = original;

      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic[j];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.entries_checked;
      param_max = std::max(param_max, rel);
      if (rel > result.max_relative_error || result.worst_parameter.empty()) {
        result.max_relative_error = rel;
        result.worst_parameter = p.name;
        result.worst_index = j;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
    result.per_parameter.emplace_back(p.name, param_max);
  }
  result.passed = result.max_relative_error < options.tolerance;
  return result;
}

GradCheckResult grad_check_resampling(ParameterList& params,
                                      const std::function<LossBuilder(std::uint64_t attempt)>& make_builder,
                                      const GradCheckOptions& options, double min_margin,
                                      std::uint64_t max_attempts) {
  for (std::uint64_t attempt = 0; attempt < max_attempts; ++attempt) {
    LossBuilder build = make_builder(attempt);
    Graph probe;
    probe.value(build(probe));
    if (probe.min_relu_margin() < min_margin && attempt + 1 < max_attempts) continue;
    return grad_check(params, build, options);
  }
  return {};
}

}  // namespace pae::ad
