#pragma once

#include <string>
#include <vector>

#include "pae/graph.hpp"
#include "pae/optim.hpp"
#include "pae/rng.hpp"

namespace pae::nn {

/// Affine layer y = x W + b; W is [in, out]. Holds indices into the owning
/// model's ParameterList.
struct Linear {
  std::size_t weight = 0;
  std::size_t bias = 0;
  std::size_t in = 0;
  std::size_t out = 0;

  static Linear create(ad::ParameterList& params, const std::string& name, std::size_t in, std::size_t out,
                       bool followed_by_relu, SplitMix64& rng, double gain = 1.0);
  ad::NodeId apply(ad::Graph& g, const ad::ParameterList& params, ad::NodeId x) const;
};

/// Stack of affine layers with ReLU between them. `widths` includes the input
/// width; the final layer gets a ReLU only when `relu_last` is set.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ad::ParameterList& params, const std::string& prefix, const std::vector<std::size_t>& widths, bool relu_last,
      SplitMix64& rng, double gain = 1.0);

  ad::NodeId apply(ad::Graph& g, const ad::ParameterList& params, ad::NodeId x) const;
  std::size_t in_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t out_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  std::size_t depth() const { return layers_.size(); }

 private:
  std::vector<Linear> layers_;
  bool relu_last_ = false;
};

/// Copies a [rows, cols] block of floats into a tensor.
ad::Tensor tensor_from_floats(std::span<const float> values, std::size_t rows, std::size_t cols);

}  // namespace pae::nn
