#include "rirforge/nn/graph.hpp"

#include "rirforge/error.hpp"

namespace rirforge::nn {

Graph::Graph(const ParameterSet* params, bool record) : params_(params), record_(record) {
  if (params_ != nullptr) param_nodes_.assign(params_->size(), -1);
}

NodeId Graph::constant(Tensor value) {
  Node node;
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

NodeId Graph::parameter(std::size_t index) {
  if (params_ == nullptr || index >= params_->size()) {
    throw Error(ErrorKind::kInvalidArgument, "parameter index out of range");
  }
  if (param_nodes_[index] >= 0) return static_cast<NodeId>(param_nodes_[index]);
  Node node;
  node.external = &params_->tensors[index];
  node.needs_grad = record_;
  node.param_index = static_cast<std::ptrdiff_t>(index);
  nodes_.push_back(std::move(node));
  param_nodes_[index] = static_cast<std::ptrdiff_t>(nodes_.size() - 1);
  return nodes_.size() - 1;
}

NodeId Graph::add_node(Tensor value, std::vector<NodeId> inputs, BackwardFn backward) {
  Node node;
  node.owned = std::move(value);
  if (record_) {
    for (NodeId in : inputs) node.needs_grad = node.needs_grad || nodes_.at(in).needs_grad;
    if (node.needs_grad) {
      node.inputs = std::move(inputs);
      node.backward = std::move(backward);
    }
  }
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

const Tensor& Graph::value(NodeId id) const {
  const Node& node = nodes_.at(id);
  return node.external != nullptr ? *node.external : node.owned;
}

Tensor& Graph::grad(NodeId id) {
  Node& node = nodes_.at(id);
  if (node.grad.shape.empty() && node.grad.data.empty()) {
    node.grad = Tensor(value(id).shape, 0.0);
  }
  return node.grad;
}

Gradients Graph::backward(NodeId loss) {
  if (!record_) {
    throw Error(ErrorKind::kInvalidArgument, "graph was built without recording");
  }
  if (consumed_) throw Error(ErrorKind::kGraphConsumed, "backward already ran on this graph");
  if (value(loss).numel() != 1) {
    throw Error(ErrorKind::kShapeMismatch, "backward needs a scalar loss");
  }
  consumed_ = true;

  Gradients grads = params_ != nullptr ? params_->zeros_like() : Gradients{};
  grad(loss).data[0] = 1.0;
  for (NodeId id = loss + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.needs_grad || node.grad.data.empty()) continue;
    if (node.backward) node.backward(*this, id);
    if (node.param_index >= 0) {
      auto& dst = grads.tensors[static_cast<std::size_t>(node.param_index)].data;
      const auto& src = node.grad.data;
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
    // Activations and their gradients are no longer needed once propagated.
    node.backward = nullptr;
    node.grad = Tensor{};
  }
  return grads;
}

}  // namespace rirforge::nn
