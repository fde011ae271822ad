#pragma once

#include <functional>

#include "rirforge/nn/graph.hpp"

namespace rirforge::nn {

// x: (B, Cin, L), weight: (Cout, Cin, kernel), bias: (Cout).
// Output length is (L + 2 * padding - dilation * (kernel - 1) - 1) / stride + 1.
NodeId conv1d(Graph& g, NodeId x, NodeId weight, NodeId bias, int stride, int dilation,
              int padding);

// Normalizes over (channels in group, length) per item; gamma/beta: (C).
NodeId group_norm(Graph& g, NodeId x, NodeId gamma, NodeId beta, int groups,
                  double epsilon = 1e-5);

// x * sigmoid(x)
NodeId silu(Graph& g, NodeId x);

NodeId add(Graph& g, NodeId a, NodeId b);

// x: (B, C, L) plus per-item channel offsets v: (B, C).
NodeId add_channel_offset(Graph& g, NodeId x, NodeId v);

// x: (B, In), weight: (Out, In), bias: (Out) -> (B, Out).
NodeId linear(Graph& g, NodeId x, NodeId weight, NodeId bias);

NodeId concat_channels(Graph& g, NodeId a, NodeId b);

// Nearest-neighbour repeat of every sample twice along the length axis.
NodeId upsample2(Graph& g, NodeId x);

NodeId sum(Graph& g, NodeId x);
NodeId scale(Graph& g, NodeId x, double factor);

struct LossValue {
  double value = 0.0;
  Tensor grad;  // d value / d prediction, same shape as the prediction
};

// Scalar node whose value and input gradient come from `fn` evaluated on the
// prediction. Lets losses with closed-form gradients join the tape.
NodeId custom_loss(Graph& g, NodeId prediction,
                   const std::function<LossValue(const Tensor& prediction)>& fn);

}  // namespace rirforge::nn
