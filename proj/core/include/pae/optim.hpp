#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pae/graph.hpp"
#include "pae/tensor.hpp"

namespace pae::ad {

struct Parameter {
  std::string name;
  Tensor value;
};

/// Named, ordered parameter storage owned by a model. Element addresses are
/// stable once construction finishes; graphs refer to them by address.
class ParameterList {
 public:
  ParameterList() = default;
  ParameterList(const ParameterList&) = delete;
  ParameterList& operator=(const ParameterList&) = delete;
  ParameterList(ParameterList&&) = default;
  ParameterList& operator=(ParameterList&&) = default;

  /// Returns the index of the new parameter.
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const { return items_.size(); }
  Parameter& operator[](std::size_t i) { return *items_[i]; }
  const Parameter& operator[](std::size_t i) const { return *items_[i]; }
  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  std::size_t total_values() const;

 private:
  // unique_ptr keeps each Tensor's address fixed while the vector grows.
  std::vector<std::unique_ptr<Parameter>> items_;
};

enum class OptimKind { kAdam, kAdamW };

struct OptimState {
  OptimKind kind = OptimKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-10;
  double weight_decay = 0.0;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  static OptimState adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-10);
  static OptimState adamw(double lr, double weight_decay = 0.01, double beta1 = 0.9, double beta2 = 0.999,
                          double epsilon = 1e-8);
};

std::string_view optim_kind_name(OptimKind kind);
OptimKind optim_kind_from_name(std::string_view name);

/// One Adam/AdamW update with bias correction over every parameter in
/// `params`. Moments are lazily sized on the first call. Throws NumericalError naming the offending
/// parameter when a gradient is non-finite; nothing is modified in that case.
void step(OptimState& state, ParameterList& params, const Gradients& grads);

}  // namespace pae::ad
