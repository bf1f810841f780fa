#pragma once

#include <cstdint>
#include <vector>

#include "pgan/nn/network.hpp"

namespace pgan::nn {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.6;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

enum class Direction { descend, ascend };

/// First/second moment estimates for one network.
struct AdamState {
  ParamGrads first_moment;
  ParamGrads second_moment;
  std::uint64_t step_count = 0;
  AdamConfig config;

  static AdamState for_network(const Network& net, const AdamConfig& config);
};

/// One bias-corrected Adam update. `ascend` flips the gradient sign so the
/// same routine serves maximisation steps.
void adam_step(Network& net, const ParamGrads& grads, AdamState& state,
               Direction direction = Direction::descend);

}  // namespace pgan::nn
