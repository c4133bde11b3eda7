#include "tdrom/graph.hpp"

#include <string>

#include "tdrom/error.hpp"

namespace tdrom {

NodeId Graph::parameter(const Tensor& value) {
  if (auto it = params_.find(&value); it != params_.end()) return it->second;
  Node n;
  n.leaf = true;
  n.ref = &value;
  nodes_.push_back(std::move(n));
  params_.emplace(&value, nodes_.size() - 1);
  return nodes_.size() - 1;
}

NodeId Graph::constant(Tensor value) {
  Node n;
  n.leaf = true;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

NodeId Graph::apply(OpKind kind, std::initializer_list<NodeId> inputs, const OpAttrs& attrs) {
  return apply(kind, std::vector<NodeId>(inputs), attrs);
}

NodeId Graph::apply(OpKind kind, const std::vector<NodeId>& inputs, const OpAttrs& attrs) {
  std::vector<const Tensor*> vals;
  vals.reserve(inputs.size());
  for (NodeId id : inputs) {
    if (id >= nodes_.size()) throw ShapeError("graph: input node " + std::to_string(id) + " does not exist");
    vals.push_back(&val(nodes_[id]));
  }
  Node n;
  n.kind = kind;
  n.inputs = inputs;
  n.attrs = attrs;
  n.owned = forward(kind, vals, attrs);
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

const Tensor& Graph::value(NodeId id) const { return val(nodes_.at(id)); }

void Graph::backward(NodeId loss) {
  const Tensor& lv = value(loss);
  if (!lv.is_scalar())
    throw ShapeError("backward: loss must be scalar, got " + shape_str(lv.shape()));
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  nodes_[loss].grad = Tensor(lv.shape(), 1.0);
  nodes_[loss].has_grad = true;

  std::vector<const Tensor*> vals;
  for (NodeId id = loss + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad || n.leaf) continue;
    vals.clear();
    for (NodeId in : n.inputs) vals.push_back(&val(nodes_[in]));
    auto grads = vjp(n.kind, vals, n.attrs, n.owned, n.grad);
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      Node& src = nodes_[n.inputs[k]];
      if (src.has_grad) {
        src.grad += grads[k];
      } else {
        src.grad = std::move(grads[k]);
        src.has_grad = true;
      }
    }
  }
}

Tensor Graph::grad(NodeId id) const {
  const Node& n = nodes_.at(id);
  if (n.has_grad && !n.grad.empty()) return n.grad;
  return Tensor(val(n).shape(), 0.0);
}

Tensor Graph::grad_of(const Tensor& param) const {
  auto it = params_.find(&param);
  if (it == params_.end()) return Tensor(param.shape(), 0.0);
  return grad(it->second);
}

NodeId conv2d(Graph& g, NodeId x, NodeId w, NodeId b, std::size_t stride, std::size_t pad) {
  OpAttrs a;
  a.stride = stride;
  a.pad = pad;
  return g.apply(OpKind::conv2d, {x, w, b}, a);
}

NodeId conv2d_transpose(Graph& g, NodeId x, NodeId w, NodeId b, std::size_t stride,
                        std::size_t pad, std::size_t output_padding) {
  OpAttrs a;
  a.stride = stride;
  a.pad = pad;
  a.output_padding = output_padding;
  return g.apply(OpKind::conv2d_transpose, {x, w, b}, a);
}

NodeId linear(Graph& g, NodeId x, NodeId w, NodeId b) { return g.apply(OpKind::linear, {x, w, b}); }
NodeId relu(Graph& g, NodeId x) { return g.apply(OpKind::relu, {x}); }
NodeId sigmoid(Graph& g, NodeId x) { return g.apply(OpKind::sigmoid, {x}); }
NodeId add(Graph& g, NodeId a, NodeId b) { return g.apply(OpKind::add, {a, b}); }
NodeId multiply(Graph& g, NodeId a, NodeId b) { return g.apply(OpKind::multiply, {a, b}); }

NodeId scale(Graph& g, NodeId x, double factor) {
  OpAttrs a;
  a.factor = factor;
  return g.apply(OpKind::scale, {x}, a);
}

NodeId reshape(Graph& g, NodeId x, Shape shape) {
  OpAttrs a;
  a.shape = std::move(shape);
  return g.apply(OpKind::reshape, {x}, a);
}

NodeId sum(Graph& g, NodeId x) { return g.apply(OpKind::sum, {x}); }

}  // namespace tdrom
