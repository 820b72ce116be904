#include "pae/layers.hpp"

#include <cmath>

#include "pae/error.hpp"

namespace pae::nn {

Linear Linear::create(ad::ParameterList& params, const std::string& name, std::size_t in, std::size_t out,
                      bool followed_by_relu, SplitMix64& rng, double gain) {
  // He-uniform ahead of a ReLU, LeCun-uniform otherwise; biases start at zero.
  const double bound = gain * (followed_by_relu ? std::sqrt(6.0 / static_cast<double>(in))
                                                : std::sqrt(3.0 / static_cast<double>(in)));
  ad::Tensor w({in, out});
  for (double& v : w.data()) v = rng.uniform(-bound, bound);
  Linear layer;
  layer.in = in;
  layer.out = out;
  layer.weight = params.add(name + ".weight", std::move(w));
  layer.bias = params.add(name + ".bias", ad::Tensor({out}, 0.0));
  return layer;
}

ad::NodeId Linear::apply(ad::Graph& g, const ad::ParameterList& params, ad::NodeId x) const {
  const ad::NodeId w = g.parameter(params[weight].value);
  const ad::NodeId b = g.parameter(params[bias].value);
  return g.add(g.matmul(x, w), b);
}

Mlp::Mlp(ad::ParameterList& params, const std::string& prefix, const std::vector<std::size_t>& widths,
         bool relu_last, SplitMix64& rng, double gain)
    : relu_last_(relu_last) {
  if (widths.size() < 2) throw ValidationError("an MLP needs at least an input and an output width");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool relu = relu_last || i + 2 < widths.size();
    layers_.push_back(Linear::create(params, prefix + "." + std::to_string(i), widths[i], widths[i + 1], relu, rng, gain));
  }
}

ad::NodeId Mlp::apply(ad::Graph& g, const ad::ParameterList& params, ad::NodeId x) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i].apply(g, params, x);
    if (relu_last_ || i + 1 < layers_.size()) x = g.relu(x);
  }
  return x;
}

ad::Tensor tensor_from_floats(std::span<const float> values, std::size_t rows, std::size_t cols) {
  if (values.size() != rows * cols) {
    throw ShapeError("expected " + std::to_string(rows * cols) + " values, got " + std::to_string(values.size()));
  }
  ad::Tensor t({rows, cols});
  for (std::size_t i = 0; i < values.size(); ++i) t[i] = static_cast<double>(values[i]);
  return t;
}

}  // namespace pae::nn
