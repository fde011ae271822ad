#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "rirforge/nn/tensor.hpp"

namespace rirforge::nn {

using NodeId = std::size_t;

class Graph;

// Reads grad(self) and accumulates into the gradients of the node's inputs.
using BackwardFn = std::function<void(Graph& graph, NodeId self)>;

// Reverse-mode tape. Nodes are appended in evaluation order, so a reverse walk
// is a valid topological order. A recording graph can be differentiated once;
// a non-recording graph only evaluates values.
class Graph {
 public:
  explicit Graph(const ParameterSet* params = nullptr, bool record = true);

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  bool recording() const noexcept { return record_; }

  NodeId constant(Tensor value);
  // Leaf referencing params[index]; repeated calls return the same node.
  NodeId parameter(std::size_t index);

  NodeId add_node(Tensor value, std::vector<NodeId> inputs, BackwardFn backward);

  const Tensor& value(NodeId id) const;
  bool needs_grad(NodeId id) const { return nodes_.at(id).needs_grad; }
  // Gradient buffer, allocated (zeroed) on first access.
  Tensor& grad(NodeId id);

  std::size_t node_count() const noexcept { return nodes_.size(); }

  // Gradient of the scalar `loss` node with respect to every parameter.
  // Throws kGraphConsumed when called a second time.
  Gradients backward(NodeId loss);

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor grad;
    std::vector<NodeId> inputs;
    BackwardFn backward;
    bool needs_grad = false;
    std::ptrdiff_t param_index = -1;
  };

  const ParameterSet* params_;
  bool record_;
  bool consumed_ = false;
  std::vector<Node> nodes_;
  std::vector<std::ptrdiff_t> param_nodes_;
};

}  // namespace rirforge::nn
