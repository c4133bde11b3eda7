#pragma once

#include <cstddef>
#include <initializer_list>
#include <unordered_map>
#include <vector>

#include "tdrom/ops.hpp"
#include "tdrom/tensor.hpp"

namespace tdrom {

using NodeId = std::size_t;

/// Append-only record of primitive evaluations for reverse-mode
/// differentiation. Inputs of a node always have smaller ids, so the tape is
/// acyclic and backward() can sweep ids in descending order.
///
/// A Graph is single-writer. Parameters are registered by address: binding
/// the same Tensor twice yields the same leaf, which is how weight sharing is
/// expressed.
class Graph {
 public:
  /// Leaf whose gradient is tracked; the tensor must outlive the graph.
  NodeId parameter(const Tensor& value);
  /// Leaf holding a private copy; no gradient is reported for it.
  NodeId constant(Tensor value);

  NodeId apply(OpKind kind, std::initializer_list<NodeId> inputs, const OpAttrs& attrs = {});
  NodeId apply(OpKind kind, const std::vector<NodeId>& inputs, const OpAttrs& attrs = {});

  const Tensor& value(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a scalar node. Throws ShapeError on non-scalar loss.
  void backward(NodeId loss);

  /// Gradient of the last backward() w.r.t. a node; zeros if unreachable.
  Tensor grad(NodeId id) const;
  /// Gradient w.r.t. a registered parameter; zeros if it was never bound.
  Tensor grad_of(const Tensor& param) const;
  bool has_parameter(const Tensor& param) const { return params_.count(&param) != 0; }

 private:
  struct Node {
    OpKind kind = OpKind::sum;
    bool leaf = false;
    std::vector<NodeId> inputs;
    OpAttrs attrs;
    Tensor owned;                  // forward value (leaves: constants only)
    const Tensor* ref = nullptr;   // parameter leaves
    Tensor grad;
    bool has_grad = false;
  };

  const Tensor& val(const Node& n) const { return n.ref ? *n.ref : n.owned; }

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, NodeId> params_;
};

// Convenience builders. Each records one primitive.
NodeId conv2d(Graph& g, NodeId x, NodeId w, NodeId b, std::size_t stride, std::size_t pad);
NodeId conv2d_transpose(Graph& g, NodeId x, NodeId w, NodeId b, std::size_t stride,
                        std::size_t pad, std::size_t output_padding);
NodeId linear(Graph& g, NodeId x, NodeId w, NodeId b);
NodeId relu(Graph& g, NodeId x);
NodeId sigmoid(Graph& g, NodeId x);
NodeId add(Graph& g, NodeId a, NodeId b);
NodeId multiply(Graph& g, NodeId a, NodeId b);
NodeId scale(Graph& g, NodeId x, double factor);
NodeId reshape(Graph& g, NodeId x, Shape shape);
NodeId sum(Graph& g, NodeId x);

}  // namespace tdrom
