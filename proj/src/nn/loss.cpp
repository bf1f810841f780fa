#include "pgan/nn/loss.hpp"

#include <cmath>

#include "pgan/common/error.hpp"

namespace pgan::nn {

std::string_view to_string(LossKind kind) {
  return kind == LossKind::mean_squared ? "mean_squared" : "cross_entropy";
}

LossResult cross_entropy(const Tensor& probs, std::span<const int> labels,
                         std::optional<std::span<const double>> class_weights) {
  const std::size_t n = probs.rows();
  const std::size_t m = probs.cols();
  if (labels.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " rows");
  }
  if (class_weights && class_weights->size() != m) {
    throw DimensionError("cross_entropy: class weight count differs from class count");
  }
  LossResult r{0.0, Tensor(probs.shape(), 0.0), false};
  if (n == 0) return r;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= m) {
      throw DomainError("cross_entropy: label " + std::to_string(labels[i]) + " out of range");
    }
    const auto y = static_cast<std::size_t>(labels[i]);
    const double w = class_weights ? (*class_weights)[y] : 1.0;
    double p = probs(i, y);
    if (p < kLogFloor) {
      p = kLogFloor;
      r.clamped = true;
    }
    r.value -= w * std::log(p) * inv_n;
    r.grad(i, y) = -w * inv_n / p;
  }
  return r;
}

LossResult mean_squared_error(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) {
    throw DimensionError("mean_squared_error: " + pred.shape_string() + " vs " + target.shape_string());
  }
  LossResult r{0.0, Tensor(pred.shape(), 0.0), false};
  if (pred.empty()) return r;
  const double inv = 1.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    r.value += d * d * inv;
    r.grad[i] = 2.0 * d * inv;
  }
  return r;
}

}  // namespace pgan::nn
