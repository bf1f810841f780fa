#include "pgan/training/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pgan/common/error.hpp"
#include "pgan/nn/loss.hpp"

namespace pgan::training {
namespace {

void check_labels(std::span<const int> labels, std::size_t k, const char* what) {
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw DomainError(std::string(what) + ": unknown class label " + std::to_string(y));
    }
  }
}

// Per-class mean weights: sample r of class i gets coef[i] / count_i.
nn::Tensor class_mean_weights(std::span<const int> labels, std::span<const double> coef, std::size_t k) {
  std::vector<std::size_t> counts(k, 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  nn::Tensor w = nn::Tensor::matrix(labels.size(), 1);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto y = static_cast<std::size_t>(labels[r]);
    w[r] = coef[y] / static_cast<double>(counts[y]);
  }
  return w;
}

}  // namespace

LabelWeights label_weights(const data::ClassPriors& priors, LabelMode mode, LabelFallback fallback) {
  const std::size_t k = priors.num_classes();
  if (k < 2) throw DomainError("label sampling needs at least two classes");
  const auto major = static_cast<std::size_t>(priors.majority());
  const double pk = priors.priors[major];
  LabelWeights out;
  out.weights.assign(k, 0.0);
  if (mode == LabelMode::prior_gap) {
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      out.weights[i] = i == major ? 0.0 : pk - priors.priors[i];
      total += out.weights[i];
    }
    if (total > 0.0) {
      for (double& w : out.weights) w /= total;
      return out;
    }
    out.fallback_used = true;
    if (fallback == LabelFallback::uniform_all) {
      out.weights.assign(k, 1.0 / static_cast<double>(k));
      return out;
    }
  }
  for (std::size_t i = 0; i < k; ++i) out.weights[i] = i == major ? 0.0 : 1.0 / static_cast<double>(k - 1);
  return out;
}

LabelDraw sample_minority_labels(const data::ClassPriors& priors, std::size_t n, LabelMode mode, Rng& rng,
                                 LabelFallback fallback) {
  if (n == 0) throw DomainError("sample_minority_labels: n must be at least 1");
  const auto lw = label_weights(priors, mode, fallback);
  std::discrete_distribution<int> dist(lw.weights.begin(), lw.weights.end());
  LabelDraw out;
  out.fallback_used = lw.fallback_used;
  out.labels.resize(n);
  for (int& y : out.labels) y = dist(rng.engine());
  return out;
}

LabelDraw sample_minority_labels(const data::ClassPriors& priors, std::size_t n, LabelMode mode,
                                 std::uint64_t seed, LabelFallback fallback) {
  Rng rng(seed);
  return sample_minority_labels(priors, n, mode, rng, fallback);
}

CriticObjective critic_objective(const nn::Network& d_net, const nn::Tensor& real, std::span<const int> real_labels,
                                 const nn::Tensor& fake, std::span<const int> fake_labels,
                                 const data::ClassPriors& priors) {
  const std::size_t k = priors.num_classes();
  check_labels(real_labels, k, "critic_objective");
  check_labels(fake_labels, k, "critic_objective");
  const double pk = priors.priors[static_cast<std::size_t>(priors.majority())];
  std::vector<double> real_coef(priors.priors);
  std::vector<double> fake_coef(k);
  for (std::size_t i = 0; i < k; ++i) fake_coef[i] = -(pk - priors.priors[i]);

  CriticObjective out{0.0, nn::ParamGrads::zeros_like(d_net), nn::Tensor::matrix(fake_labels.size(), 0)};
  auto term = [&](const nn::Tensor& batch, std::span<const int> labels, std::span<const double> coef,
                  bool keep_input_grad) {
    if (labels.empty()) return;
    if (batch.rank() != 2 || batch.rows() != labels.size()) {
      throw DimensionError("critic_objective: batch " + batch.shape_string() + " for " +
                           std::to_string(labels.size()) + " labels");
    }
    const auto acts = nn::forward(d_net, batch);
    const nn::Tensor w = class_mean_weights(labels, coef, k);
    for (std::size_t r = 0; r < labels.size(); ++r) out.value += w[r] * acts.output()[r];
    auto back = nn::backward(d_net, acts, w);
    out.grads.add_scaled(back.params, 1.0);
    if (keep_input_grad) out.fake_input_grad = std::move(back.input);
  };
  term(real, real_labels, real_coef, false);
  term(fake, fake_labels, fake_coef, true);
  return out;
}

Penalty gradient_penalty(const nn::Network& d_net, const nn::Tensor& real, const nn::Tensor& fake, Rng& rng,
                         std::size_t penalised_cols) {
  if (!real.same_shape(fake) || real.rank() != 2) {
    throw DimensionError("gradient_penalty: real " + real.shape_string() + " vs fake " + fake.shape_string());
  }
  const std::size_t n = real.rows();
  const std::size_t cols = real.cols();
  const std::size_t pc = penalised_cols == 0 ? cols : std::min(penalised_cols, cols);
  nn::Tensor mixed = nn::Tensor::matrix(n, cols);
  for (std::size_t r = 0; r < n; ++r) {
    const double u = rng.uniform();
    for (std::size_t c = 0; c < cols; ++c) mixed(r, c) = u * real(r, c) + (1.0 - u) * fake(r, c);
  }
  const auto acts = nn::forward(d_net, mixed);
  const nn::Tensor grad = nn::input_gradient(d_net, acts);
  Penalty out;
  nn::Tensor seed = nn::Tensor::matrix(n, cols);
  for (std::size_t r = 0; r < n; ++r) {
    double norm2 = 0.0;
    for (std::size_t c = 0; c < pc; ++c) norm2 += grad(r, c) * grad(r, c);
    const double norm = std::sqrt(norm2);
    out.value += (norm - 1.0) * (norm - 1.0) / static_cast<double>(n);
    if (norm > 0.0) {
      const double f = 2.0 * (norm - 1.0) / (norm * static_cast<double>(n));
      for (std::size_t c = 0; c < pc; ++c) seed(r, c) = f * grad(r, c);
    }
  }
  out.grads = nn::input_gradient_backward(d_net, acts, seed);
  return out;
}

Penalty gradient_penalty(const nn::Network& d_net, const nn::Tensor& real, const nn::Tensor& fake,
                         std::uint64_t seed, std::size_t penalised_cols) {
  Rng rng(seed);
  return gradient_penalty(d_net, real, fake, rng, penalised_cols);
}

std::pair<double, bool> classifier_objective_value(const nn::Tensor& probs, std::span<const int> labels,
                                                   const data::ClassPriors& priors) {
  const std::size_t k = priors.num_classes();
  if (probs.rank() != 2 || probs.rows() != labels.size() || probs.cols() != k) {
    throw DimensionError("classifier_objective: probabilities " + probs.shape_string() + " for " +
                         std::to_string(labels.size()) + " labels and " + std::to_string(k) + " classes");
  }
  check_labels(labels, k, "classifier_objective");
  const double pk = priors.priors[static_cast<std::size_t>(priors.majority())];
  const double n = static_cast<double>(labels.size());
  double value = 0.0;
  bool clamped = false;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto i = static_cast<std::size_t>(labels[r]);
    for (std::size_t j = 0; j < k; ++j) {
      const double arg = j == i ? probs(r, j) : 1.0 - probs(r, j);
      const double coef = j == i ? priors.priors[i] : pk - priors.priors[j];
      if (arg < nn::kLogFloor) clamped = true;
      value += coef * std::log(std::max(arg, nn::kLogFloor)) / n;
    }
  }
  return {value, clamped};
}

ClassifierObjective classifier_objective(const nn::Network& c_net, const nn::Tensor& batch,
                                         std::span<const int> labels, const data::ClassPriors& priors) {
  if (c_net.output_activation() != nn::Activation::softmax) {
    throw ConsistencyError("classifier_objective: classifier must end in softmax");
  }
  const auto acts = nn::forward(c_net, batch);
  const nn::Tensor& probs = acts.output();
  ClassifierObjective out;
  std::tie(out.value, out.clamped) = classifier_objective_value(probs, labels, priors);

  const std::size_t k = priors.num_classes();
  const double pk = priors.priors[static_cast<std::size_t>(priors.majority())];
  const double n = static_cast<double>(labels.size());
  nn::Tensor dprobs = nn::Tensor::matrix(labels.size(), k);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto i = static_cast<std::size_t>(labels[r]);
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) {
        dprobs(r, j) = priors.priors[i] / std::max(probs(r, j), nn::kLogFloor) / n;
      } else {
        dprobs(r, j) = -(pk - priors.priors[j]) / std::max(1.0 - probs(r, j), nn::kLogFloor) / n;
      }
    }
  }
  auto back = nn::backward(c_net, acts, dprobs);
  out.grads = std::move(back.params);
  out.input_grad = std::move(back.input);
  return out;
}

}  // namespace pgan::training
