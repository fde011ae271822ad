#pragma once

#include <cstdint>

#include "rirforge/nn/tensor.hpp"

namespace rirforge::nn {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // decoupled
  double clip_norm = 1.0;     // global gradient norm; <= 0 disables
};

struct AdamState {
  std::int64_t step = 0;
  ParameterSet first_moment;
  ParameterSet second_moment;

  bool empty() const noexcept { return first_moment.size() == 0; }
};

AdamState make_adam_state(const ParameterSet& params);

// Scales grads in place so that their global norm is at most max_norm.
// Returns the norm before clipping.
double clip_global_norm(Gradients& grads, double max_norm);

// One decoupled-weight-decay Adam update. Clips `grads` first when
// config.clip_norm > 0. Returns the pre-clip gradient norm.
double adam_step(ParameterSet& params, Gradients grads, AdamState& state,
                 const AdamConfig& config);

}  // namespace rirforge::nn
