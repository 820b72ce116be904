#include "pae/graph.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>

#include "pae/error.hpp"

namespace pae::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

MapC view(const Tensor& t, std::size_t rows, std::size_t cols) {
  return MapC(t.ptr(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
Map view(Tensor& t, std::size_t rows, std::size_t cols) {
  return Map(t.ptr(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

enum class Broadcast { kSame, kScalar, kRow };

Broadcast broadcast_kind(Op op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Broadcast::kSame;
  if (b.numel() == 1) return Broadcast::kScalar;
  const bool row_shaped = b.rank() == 1 || (b.rank() == 2 && b.shape()[0] == 1);
  if (row_shaped && b.numel() == a.cols()) return Broadcast::kRow;
  throw ShapeError(std::string(op_name(op)) + ": cannot broadcast " + shape_string(b.shape()) +
                   " onto " + shape_string(a.shape()));
}

double broadcast_at(const Tensor& b, Broadcast kind, std::size_t i, std::size_t cols) {
  switch (kind) {
    case Broadcast::kSame: return b[i];
    case Broadcast::kScalar: return b[0];
    case Broadcast::kRow: return b[i % cols];
  }
  return 0.0;
}

void reduce_into(Tensor& target, const Tensor& full, Broadcast kind) {
  const std::size_t cols = full.cols();
  switch (kind) {
    case Broadcast::kSame:
      for (std::size_t i = 0; i < full.numel(); ++i) target[i] += full[i];
      break;
    case Broadcast::kScalar: {
      double s = 0.0;
      for (double v : full.data()) s += v;
      target[0] += s;
      break;
    }
    case Broadcast::kRow:
      for (std::size_t i = 0; i < full.numel(); ++i) target[i % cols] += full[i];
      break;
  }
}

Shape with_last(const Shape& shape, std::size_t last) {
  Shape out = shape.empty() ? Shape{1} : shape;
  out.back() = last;
  return out;
}

void expect_inputs(Op op, std::span<const NodeId> inputs, std::size_t n) {
  if (inputs.size() != n) {
    throw ValidationError(std::string(op_name(op)) + " expects " + std::to_string(n) + " inputs, got " +
                          std::to_string(inputs.size()));
  }
}

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::kConstant: return "constant";
    case Op::kParameter: return "parameter";
    case Op::kMatMul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kRelu: return "relu";
    case Op::kConcat: return "concat";
    case Op::kSlice: return "slice";
    case Op::kMul: return "elementwise-mul";
    case Op::kScalarMul: return "scalar-mul";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kL2Norm: return "l2norm";
    case Op::kL1Loss: return "l1loss";
    case Op::kExp: return "exp";
    case Op::kNegate: return "negate";
    case Op::kNormalizeToUnit: return "normalize-to-unit";
  }
  return "unknown";
}

const Tensor* Gradients::find(const Tensor& param) const {
  auto it = grads_.find(&param);
  return it == grads_.end() ? nullptr : &it->second;
}

Tensor Gradients::of(const Tensor& param) const {
  if (const Tensor* g = find(param)) return *g;
  return Tensor(param.shape(), 0.0);
}

NodeId Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return NodeId{nodes_.size() - 1};
}

const Graph::Node& Graph::node(NodeId id) const {
  if (id.index >= nodes_.size()) throw ValidationError("unknown graph node " + std::to_string(id.index));
  return nodes_[id.index];
}

const Tensor& Graph::value(NodeId id) const { return node(id).out(); }

NodeId Graph::constant(Tensor value) {
  if (!value.all_finite()) throw NumericalError("constant input contains non-finite values");
  Node n;
  n.op = Op::kConstant;
  n.owned = std::move(value);
  return push(std::move(n));
}

NodeId Graph::parameter(const Tensor& param) {
  if (auto it = param_nodes_.find(&param); it != param_nodes_.end()) return it->second;
  if (!param.all_finite()) throw NumericalError("parameter contains non-finite values");
  Node n;
  n.op = Op::kParameter;
  n.external = &param;
  n.requires_grad = true;
  NodeId id = push(std::move(n));
  param_nodes_.emplace(&param, id);
  return id;
}

NodeId Graph::forward(Op op, std::span<const NodeId> inputs, OpAttrs attrs) {
  if (op == Op::kConstant || op == Op::kParameter) {
    throw ValidationError("leaf nodes are created with constant() or parameter()");
  }
  for (NodeId in : inputs) node(in);

  Node n;
  n.op = op;
  n.inputs.assign(inputs.begin(), inputs.end());
  n.attrs = attrs;
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(), [&](NodeId i) { return node(i).requires_grad; });

  auto in = [&](std::size_t k) -> const Tensor& { return node(inputs[k]).out(); };
  Tensor& out = n.owned;

  switch (op) {
    case Op::kMatMul: {
      expect_inputs(op, inputs, 2);
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
        throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
      }
      const std::size_t m = a.shape()[0], k = a.shape()[1], p = b.shape()[1];
      out = Tensor({m, p});
      view(out, m, p).noalias() = view(a, m, k) * view(b, k, p);
      break;
    }
    case Op::kAdd:
    case Op::kMul: {
      expect_inputs(op, inputs, 2);
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      const Broadcast kind = broadcast_kind(op, a, b);
      out = Tensor(a.shape());
      const std::size_t cols = a.cols();
      if (op == Op::kAdd) {
        for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] + broadcast_at(b, kind, i, cols);
      } else {
        for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] * broadcast_at(b, kind, i, cols);
      }
      break;
    }
    case Op::kRelu: {
      expect_inputs(op, inputs, 1);
      const Tensor& a = in(0);
      out = Tensor(a.shape());
      for (std::size_t i = 0; i < a.numel(); ++i) {
        out[i] = a[i] > 0.0 ? a[i] : 0.0;
        min_relu_margin_ = std::min(min_relu_margin_, std::abs(a[i]));
      }
      break;
    }
    case Op::kConcat: {
      if (inputs.empty()) throw ValidationError("concat needs at least one input");
      const Tensor& first = in(0);
      const std::size_t rows = first.rows();
      std::size_t total = 0;
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Tensor& t = in(k);
        const Shape lead_a(first.shape().begin(), first.shape().end() - 1);
        const Shape lead_b(t.shape().begin(), t.shape().end() - 1);
        if (lead_a != lead_b) {
          throw ShapeError("concat: leading shapes differ, " + shape_string(first.shape()) + " and " +
                           shape_string(t.shape()));
        }
        total += t.cols();
      }
      out = Tensor(with_last(first.shape(), total));
      std::size_t offset = 0;
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Tensor& t = in(k);
        const std::size_t c = t.cols();
        for (std::size_t r = 0; r < rows; ++r) {
          std::copy_n(t.ptr() + r * c, c, out.ptr() + r * total + offset);
        }
        offset += c;
      }
      break;
    }
    case Op::kSlice: {
      expect_inputs(op, inputs, 1);
      const Tensor& a = in(0);
      if (attrs.begin >= attrs.end || attrs.end > a.cols()) {
        throw ShapeError("slice: range [" + std::to_string(attrs.begin) + ", " + std::to_string(attrs.end) +
                         ") outside last axis of " + shape_string(a.shape()));
      }
      const std::size_t width = attrs.end - attrs.begin;
      const std::size_t rows = a.rows();
      const std::size_t cols = a.cols();
      out = Tensor(with_last(a.shape(), width));
      for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(a.ptr() + r * cols + attrs.begin, width, out.ptr() + r * width);
      }
      break;
    }
    case Op::kScalarMul: {
      expect_inputs(op, inputs, 1);
      const Tensor& a = in(0);
      out = Tensor(a.shape());
      for (std::size_t i = 0; i < a.numel(); ++i) out[i] = attrs.factor * a[i];
      break;
    }
    case Op::kSum:
    case Op::kMean: {
      expect_inputs(op, inputs, 1);
      const Tensor& a = in(0);
      double s = 0.0;
      for (double v : a.data()) s += v;
      if (op == Op::kMean) s /= static_cast<double>(a.numel());
      out = Tensor::scalar(s);
      break;
    }
    case Op::kL2Norm: {
      expect_inputs(op, inputs, 1);
      const Tensor& a = in(0);
      const std::size_t rows = a.rows(), cols = a.cols();
      out = Tensor(with_last(a.shape(), 1));
      for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += a.at(r, c) * a.at(r, c);
        out[r] = std::sqrt(s);
      }
      break;
    }
    case Op::kL1Loss: {
      expect_inputs(op, inputs, 2);
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      if (a.shape() != b.shape()) {
        throw ShapeError("l1loss: shapes differ, " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
      }
      double s = 0.0;
      for (std::size_t i = 0; i < a.numel(); ++i) s += std::abs(a[i] - b[i]);
      out = Tensor::scalar(s / static_cast<double>(a.numel()));
      break;
    }
    case Op::kExp: {
      expect_inputs(op, inputs, 1);
      const Tensor& a = in(0);
      out = Tensor(a.shape());
      for (std::size_t i = 0; i < a.numel(); ++i) out[i] = std::exp(a[i]);
      break;
    }
    case Op::kNegate: {
      expect_inputs(op, inputs, 1);
      const Tensor& a = in(0);
      out = Tensor(a.shape());
      for (std::size_t i = 0; i < a.numel(); ++i) out[i] = -a[i];
      break;
    }
    case Op::kNormalizeToUnit: {
      expect_inputs(op, inputs, 1);
      const Tensor& a = in(0);
      const std::size_t rows = a.rows(), cols = a.cols();
      out = Tensor(a.shape());
      for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += a.at(r, c) * a.at(r, c);
        const double norm = std::sqrt(s);
        if (norm < 1e-12) throw NumericalError("normalize-to-unit: row " + std::to_string(r) + " has zero norm");
        for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = a.at(r, c) / norm;
      }
      break;
    }
    case Op::kConstant:
    case Op::kParameter:
      break;
  }

  if (!out.all_finite()) {
    throw NumericalError(std::string(op_name(op)) + " produced non-finite output at node " +
                         std::to_string(nodes_.size()));
  }
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) { return forward(Op::kMatMul, std::array{a, b}); }
NodeId Graph::add(NodeId a, NodeId b) { return forward(Op::kAdd, std::array{a, b}); }
NodeId Graph::sub(NodeId a, NodeId b) { return add(a, negate(b)); }
NodeId Graph::relu(NodeId a) { return forward(Op::kRelu, std::array{a}); }
NodeId Graph::concat(std::span<const NodeId> parts) { return forward(Op::kConcat, parts); }
NodeId Graph::concat(NodeId a, NodeId b) { return forward(Op::kConcat, std::array{a, b}); }
NodeId Graph::slice(NodeId a, std::size_t begin, std::size_t end) {
  return forward(Op::kSlice, std::array{a}, OpAttrs{.begin = begin, .end = end});
}
NodeId Graph::mul(NodeId a, NodeId b) { return forward(Op::kMul, std::array{a, b}); }
NodeId Graph::scale(NodeId a, double factor) {
  return forward(Op::kScalarMul, std::array{a}, OpAttrs{.factor = factor});
}
NodeId Graph::sum(NodeId a) { return forward(Op::kSum, std::array{a}); }
NodeId Graph::mean(NodeId a) { return forward(Op::kMean, std::array{a}); }
NodeId Graph::l2norm(NodeId a) { return forward(Op::kL2Norm, std::array{a}); }
NodeId Graph::l1loss(NodeId a, NodeId b) { return forward(Op::kL1Loss, std::array{a, b}); }
NodeId Graph::exp(NodeId a) { return forward(Op::kExp, std::array{a}); }
NodeId Graph::negate(NodeId a) { return forward(Op::kNegate, std::array{a}); }
NodeId Graph::normalize(NodeId a) { return forward(Op::kNormalizeToUnit, std::array{a}); }

Gradients Graph::backward(NodeId loss) const {
  const Node& root = node(loss);
  if (root.out().numel() != 1) {
    throw ShapeError("backward needs a one-element loss, got " + shape_string(root.out().shape()));
  }

  std::vector<Tensor> grads(nodes_.size());
  std::vector<bool> has(nodes_.size(), false);
  auto accum = [&](NodeId id) -> Tensor* {
    const Node& n = nodes_[id.index];
    if (!n.requires_grad) return nullptr;
    if (!has[id.index]) {
      grads[id.index] = Tensor(n.out().shape(), 0.0);
      has[id.index] = true;
    }
    return &grads[id.index];
  };

  Gradients result;
  if (!root.requires_grad) return result;
  accum(loss)->fill(1.0);

  for (std::size_t idx = loss.index + 1; idx-- > 0;) {
    if (!has[idx]) continue;
    const Node& n = nodes_[idx];
    const Tensor& g = grads[idx];
    const Tensor& out = n.out();
    auto in = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k].index].out(); };

    switch (n.op) {
      case Op::kConstant:
        break;
      case Op::kParameter:
        result.grads_.emplace(n.external, g);
        break;
      case Op::kMatMul: {
        const Tensor& a = in(0);
        const Tensor& b = in(1);
        const std::size_t m = a.shape()[0], k = a.shape()[1], p = b.shape()[1];
        if (Tensor* ga = accum(n.inputs[0])) view(*ga, m, k).noalias() += view(g, m, p) * view(b, k, p).transpose();
        if (Tensor* gb = accum(n.inputs[1])) view(*gb, k, p).noalias() += view(a, m, k).transpose() * view(g, m, p);
        break;
      }
      case Op::kAdd: {
        const Broadcast kind = broadcast_kind(n.op, in(0), in(1));
        if (Tensor* ga = accum(n.inputs[0])) {
          for (std::size_t i = 0; i < g.numel(); ++i) (*ga)[i] += g[i];
        }
        if (Tensor* gb = accum(n.inputs[1])) reduce_into(*gb, g, kind);
        break;
      }
      case Op::kMul: {
        const Tensor& a = in(0);
        const Tensor& b = in(1);
        const Broadcast kind = broadcast_kind(n.op, a, b);
        const std::size_t cols = a.cols();
        if (Tensor* ga = accum(n.inputs[0])) {
          for (std::size_t i = 0; i < g.numel(); ++i) (*ga)[i] += g[i] * broadcast_at(b, kind, i, cols);
        }
        if (Tensor* gb = accum(n.inputs[1])) {
          Tensor prod(a.shape());
          for (std::size_t i = 0; i < g.numel(); ++i) prod[i] = g[i] * a[i];
          reduce_into(*gb, prod, kind);
        }
        break;
      }
      case Op::kRelu: {
        const Tensor& a = in(0);
        if (Tensor* ga = accum(n.inputs[0])) {
          for (std::size_t i = 0; i < g.numel(); ++i) {
            if (a[i] > 0.0) (*ga)[i] += g[i];
          }
        }
        break;
      }
      case Op::kConcat: {
        const std::size_t total = out.cols();
        const std::size_t rows = out.rows();
        std::size_t offset = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const std::size_t c = in(k).cols();
          if (Tensor* gk = accum(n.inputs[k])) {
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t j = 0; j < c; ++j) (*gk)[r * c + j] += g[r * total + offset + j];
            }
          }
          offset += c;
        }
        break;
      }
      case Op::kSlice: {
        if (Tensor* ga = accum(n.inputs[0])) {
          const std::size_t cols = in(0).cols();
          const std::size_t width = n.attrs.end - n.attrs.begin;
          const std::size_t rows = out.rows();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < width; ++j) (*ga)[r * cols + n.attrs.begin + j] += g[r * width + j];
          }
        }
        break;
      }
      case Op::kScalarMul: {
        if (Tensor* ga = accum(n.inputs[0])) {
          for (std::size_t i = 0; i < g.numel(); ++i) (*ga)[i] += n.attrs.factor * g[i];
        }
        break;
      }
      case Op::kSum:
      case Op::kMean: {
        if (Tensor* ga = accum(n.inputs[0])) {
          double scale = g[0];
          if (n.op == Op::kMean) scale /= static_cast<double>(ga->numel());
          for (std::size_t i = 0; i < ga->numel(); ++i) (*ga)[i] += scale;
        }
        break;
      }
      case Op::kL2Norm: {
        if (Tensor* ga = accum(n.inputs[0])) {
          const Tensor& a = in(0);
          const std::size_t rows = a.rows(), cols = a.cols();
          for (std::size_t r = 0; r < rows; ++r) {
            const double norm = out[r];
            // Subgradient at the origin is taken as zero.
            if (norm == 0.0) continue;
            const double coeff = g[r] / norm;
            for (std::size_t c = 0; c < cols; ++c) (*ga)[r * cols + c] += coeff * a.at(r, c);
          }
        }
        break;
      }
      case Op::kL1Loss: {
        const Tensor& a = in(0);
        const Tensor& b = in(1);
        const double scale = g[0] / static_cast<double>(a.numel());
        Tensor* ga = accum(n.inputs[0]);
        Tensor* gb = accum(n.inputs[1]);
        for (std::size_t i = 0; i < a.numel(); ++i) {
          const double d = a[i] - b[i];
          const double s = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
          if (ga) (*ga)[i] += s;
          if (gb) (*gb)[i] -= s;
        }
        break;
      }
      case Op::kExp: {
        if (Tensor* ga = accum(n.inputs[0])) {
          for (std::size_t i = 0; i < g.numel(); ++i) (*ga)[i] += g[i] * out[i];
        }
        break;
      }
      case Op::kNegate: {
        if (Tensor* ga = accum(n.inputs[0])) {
          for (std::size_t i = 0; i < g.numel(); ++i) (*ga)[i] -= g[i];
        }
        break;
      }
      case Op::kNormalizeToUnit: {
        if (Tensor* ga = accum(n.inputs[0])) {
          const Tensor& a = in(0);
          const std::size_t rows = a.rows(), cols = a.cols();
          for (std::size_t r = 0; r < rows; ++r) {
            double s = 0.0, dot = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
              s += a.at(r, c) * a.at(r, c);
              dot += out.at(r, c) * g.at(r, c);
            }
            const double norm = std::sqrt(s);
            for (std::size_t c = 0; c < cols; ++c) {
              (*ga)[r * cols + c] += (g.at(r, c) - out.at(r, c) * dot) / norm;
            }
          }
        }
        break;
      }
    }
  }
  return result;
}

}  // namespace pae::ad
