#include "pgan/nn/adam.hpp"

#include <cmath>

#include "pgan/common/error.hpp"

namespace pgan::nn {

AdamState AdamState::for_network(const Network& net, const AdamConfig& config) {
  return {ParamGrads::zeros_like(net), ParamGrads::zeros_like(net), 0, config};
}

void adam_step(Network& net, const ParamGrads& grads, AdamState& state, Direction direction) {
  auto& layers = net.layers();
  if (grads.layers.size() != layers.size() || state.first_moment.layers.size() != layers.size() ||
      state.second_moment.layers.size() != layers.size()) {
    throw DimensionError("adam_step: gradient/state layer count does not match the network");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& g = grads.layers[l];
    if (!g.weight.same_shape(layers[l].weight) || !g.bias.same_shape(layers[l].bias) ||
        !state.first_moment.layers[l].weight.same_shape(layers[l].weight) ||
        !state.second_moment.layers[l].bias.same_shape(layers[l].bias)) {
      throw DimensionError("adam_step: shape mismatch in layer " + std::to_string(l));
    }
    if (!g.weight.all_finite() || !g.bias.all_finite()) {
      throw NonFiniteError("adam_step: non-finite gradient in layer " + std::to_string(l));
    }
  }

  const auto& cfg = state.config;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  const double sign = direction == Direction::ascend ? -1.0 : 1.0;

  auto update = [&](Tensor& param, const Tensor& grad, Tensor& m, Tensor& v) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double gi = sign * grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      param[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, grads.layers[l].weight, state.first_moment.layers[l].weight,
           state.second_moment.layers[l].weight);
    update(layers[l].bias, grads.layers[l].bias, state.first_moment.layers[l].bias,
           state.second_moment.layers[l].bias);
  }
}

}  // namespace pgan::nn
