#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "pgan/nn/tensor.hpp"

namespace pgan::nn {

/// Floor applied to probabilities before taking logarithms.
inline constexpr double kLogFloor = 1e-12;

enum class LossKind { mean_squared, cross_entropy };

std::string_view to_string(LossKind kind);

struct LossResult {
  double value = 0.0;
  Tensor grad;           // d value / d input, same shape as the input
  bool clamped = false;  // a log argument hit kLogFloor
};

/// Mean negative log-likelihood over rows of a probability matrix.
/// With `class_weights`, each row's term is scaled by the weight of its label
/// (the mean is still over rows).
LossResult cross_entropy(const Tensor& probs, std::span<const int> labels,
                         std::optional<std::span<const double>> class_weights = std::nullopt);

/// Mean over all entries of (pred - target)^2.
LossResult mean_squared_error(const Tensor& pred, const Tensor& target);

}  // namespace pgan::nn
