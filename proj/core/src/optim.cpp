#include "pae/optim.hpp"

#include <cmath>

#include "pae/error.hpp"

namespace pae::ad {

std::size_t ParameterList::add(std::string name, Tensor value) {
  for (const auto& p : items_) {
    if (p->name == name) throw ValidationError("duplicate parameter name '" + name + "'");
  }
  items_.push_back(std::make_unique<Parameter>(Parameter{std::move(name), std::move(value)}));
  return items_.size() - 1;
}

Parameter& ParameterList::get(std::string_view name) {
  for (auto& p : items_) {
    if (p->name == name) return *p;
  }
  throw ValidationError("no parameter named '" + std::string(name) + "'");
}

const Parameter& ParameterList::get(std::string_view name) const {
  return const_cast<ParameterList*>(this)->get(name);
}

std::size_t ParameterList::total_values() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p->value.numel();
  return n;
}

OptimState OptimState::adam(double lr, double beta1, double beta2, double epsilon) {
  OptimState s;
  s.kind = OptimKind::kAdam;
  s.learning_rate = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  return s;
}

OptimState OptimState::adamw(double lr, double weight_decay, double beta1, double beta2, double epsilon) {
  OptimState s = adam(lr, beta1, beta2, epsilon);
  s.kind = OptimKind::kAdamW;
  s.weight_decay = weight_decay;
  return s;
}

std::string_view optim_kind_name(OptimKind kind) { return kind == OptimKind::kAdam ? "adam" : "adamw"; }

OptimKind optim_kind_from_name(std::string_view name) {
  if (name == "adam") return OptimKind::kAdam;
  if (name == "adamw") return OptimKind::kAdamW;
  throw ValidationError("unknown optimizer '" + std::string(name) + "'");
}

void step(OptimState& state, ParameterList& params, const Gradients& grads) {
  if (state.first_moment.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.first_moment.emplace_back(params[i].value.shape(), 0.0);
      state.second_moment.emplace_back(params[i].value.shape(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("optimizer tracks " + std::to_string(state.first_moment.size()) + " parameters, model has " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].shape() != params[i].value.shape()) {
      throw ShapeError("moment shape " + shape_string(state.first_moment[i].shape()) + " does not match parameter '" +
                       params[i].name + "' " + shape_string(params[i].value.shape()));
    }
    if (const Tensor* g = grads.find(params[i].value)) {
      if (!g->all_finite()) throw NumericalError("non-finite gradient for parameter '" + params[i].name + "'");
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  const double lr = state.learning_rate;

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i].value;
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    const Tensor* g = grads.find(p);
    // Parameters that did not reach the loss are left untouched.
    if (g == nullptr) continue;
    if (state.kind == OptimKind::kAdamW && state.weight_decay != 0.0) {
      const double decay = 1.0 - lr * state.weight_decay;
      for (std::size_t j = 0; j < p.numel(); ++j) p[j] *= decay;
    }
    for (std::size_t j = 0; j < p.numel(); ++j) {
      const double gj = (*g)[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace pae::ad
