#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pae/tensor.hpp"

namespace pae::ad {

enum class Op {
  kConstant,
  kParameter,
  kMatMul,
  kAdd,
  kRelu,
  kConcat,
  kSlice,
  kMul,
  kScalarMul,
  kSum,
  kMean,
  kL2Norm,
  kL1Loss,
  kExp,
  kNegate,
  kNormalizeToUnit,
};

std::string_view op_name(Op op);

struct NodeId {
  std::size_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

/// Extra arguments for ops that need them: `kSlice` reads [begin, end) on the
/// last axis, `kScalarMul` reads `factor`.
struct OpAttrs {
  std::size_t begin = 0;
  std::size_t end = 0;
  double factor = 1.0;
};

/// Gradients of a scalar loss with respect to every parameter that took part
/// in the graph, keyed by the parameter tensor's address.
class Gradients {
 public:
  const Tensor* find(const Tensor& param) const;
  /// Gradient for `param`, or zeros of its shape if it did not contribute.
  Tensor of(const Tensor& param) const;
  std::size_t size() const { return grads_.size(); }

 private:
  friend class Graph;
  std::unordered_map<const Tensor*, Tensor> grads_;
};

/// Define-by-run computation graph.
///
/// Nodes are appended in evaluation order, so a node's inputs always have
/// smaller ids and the backward sweep is a single pass in decreasing id order.
/// Parameters are referenced, not copied: they must outlive the graph and stay
/// unmodified until `backward` returns.
///
/// Broadcasting for `kAdd` and `kMul`: the second operand may have the same
/// shape as the first, hold a single element, or be a row matching the first
/// operand's last dimension.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  NodeId constant(Tensor value);
  /// Registers `param` as trainable. Registering the same tensor twice returns
  /// the same node so shared weights accumulate one gradient.
  NodeId parameter(const Tensor& param);

  /// Generic entry point; the named helpers below forward here.
  NodeId forward(Op op, std::span<const NodeId> inputs, OpAttrs attrs = {});

  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId relu(NodeId a);
  NodeId concat(std::span<const NodeId> parts);
  NodeId concat(NodeId a, NodeId b);
  NodeId slice(NodeId a, std::size_t begin, std::size_t end);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);
  /// Euclidean norm over the last axis; output shape replaces it with 1.
  NodeId l2norm(NodeId a);
  /// Mean absolute difference, scalar output.
  NodeId l1loss(NodeId a, NodeId b);
  NodeId exp(NodeId a);
  NodeId negate(NodeId a);
  /// Divides every row by its Euclidean norm.
  NodeId normalize(NodeId a);

  const Tensor& value(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a one-element loss node.
  Gradients backward(NodeId loss) const;

  /// Smallest |pre-activation| seen by any ReLU, or +inf if none ran.
  double min_relu_margin() const { return min_relu_margin_; }

 private:
  struct Node {
    Op op = Op::kConstant;
    std::vector<NodeId> inputs;
    OpAttrs attrs;
    Tensor owned;
    const Tensor* external = nullptr;
    bool requires_grad = false;
    const Tensor& out() const { return external != nullptr ? *external : owned; }
  };

  NodeId push(Node node);
  const Node& node(NodeId id) const;

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, NodeId> param_nodes_;
  double min_relu_margin_ = std::numeric_limits<double>::infinity();
};

}  // namespace pae::ad
