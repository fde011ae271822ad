#include "rirforge/nn/optimizer.hpp"

#include <cmath>

#include "rirforge/error.hpp"

namespace rirforge::nn {

AdamState make_adam_state(const ParameterSet& params) {
  return {0, params.zeros_like(), params.zeros_like()};
}

double clip_global_norm(Gradients& grads, double max_norm) {
  const double norm = std::sqrt(squared_norm(grads));
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (Tensor& t : grads.tensors) {
      for (double& v : t.data) v *= factor;
    }
  }
  return norm;
}

double adam_step(ParameterSet& params, Gradients grads, AdamState& state,
                 const AdamConfig& config) {
  if (state.empty()) state = make_adam_state(params);
  if (grads.names != params.names || state.first_moment.names != params.names) {
    throw Error(ErrorKind::kShapeMismatch, "gradient layout differs from parameters");
  }
  const double norm = clip_global_norm(grads, config.clip_norm);
  ++state.step;
  const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params.tensors[i].data;
    const auto& g = grads.tensors[i].data;
    auto& m = state.first_moment.tensors[i].data;
    auto& v = state.second_moment.tensors[i].data;
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bias1;
      const double v_hat = v[k] / bias2;
      w[k] -= config.learning_rate *
              (m_hat / (std::sqrt(v_hat) + config.epsilon) + config.weight_decay * w[k]);
    }
  }
  return norm;
}

}  // namespace rirforge::nn
