#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pgan/nn/loss.hpp"
#include "pgan/nn/network.hpp"

namespace pgan::nn {

/// Step used for central differences.
inline constexpr double kFiniteDifferenceStep = 1e-5;

/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-6)
double relative_error(double analytic, double numeric);

/// Compares backward() against central finite differences over every
/// parameter of `net`, for the loss of `kind` evaluated on `batch`. Targets
/// (regression values or labels) are drawn from `seed`. Cross-entropy needs
/// a softmax output layer. Returns 0 for a network without parameters.
double grad_check(const Network& net, const Tensor& batch, LossKind kind, std::uint64_t seed = 0);

/// Same comparison for input_gradient_backward(): the checked scalar is
/// sum(seed_matrix * input_gradient(net, x)) with a seeded random weighting.
double grad_check_input_gradient(const Network& net, const Tensor& batch, std::uint64_t seed = 0);

struct GradcheckCase {
  std::string name;
  double max_relative_error = 0.0;
  bool passed = false;
};

/// Every shipped layer/loss combination over `seeds` random networks.
std::vector<GradcheckCase> run_gradcheck_suite(std::size_t seeds = 20, double tolerance = 1e-4);

}  // namespace pgan::nn
