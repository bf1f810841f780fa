#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pgan/common/rng.hpp"
#include "pgan/data/dataset.hpp"
#include "pgan/nn/network.hpp"
#include "pgan/training/config.hpp"

namespace pgan::training {

enum class LabelMode { prior_gap, uniform_minority };

struct LabelWeights {
  std::vector<double> weights;  // per class, sums to 1
  bool fallback_used = false;
};

/// prior_gap: w_i proportional to p_k - p_i. uniform_minority: 1/(K-1) on
/// every class but the majority k. When all gaps vanish, `fallback` decides.
LabelWeights label_weights(const data::ClassPriors& priors, LabelMode mode,
                           LabelFallback fallback = LabelFallback::uniform_all);

struct LabelDraw {
  std::vector<int> labels;
  bool fallback_used = false;
};

LabelDraw sample_minority_labels(const data::ClassPriors& priors, std::size_t n, LabelMode mode, Rng& rng,
                                 LabelFallback fallback = LabelFallback::uniform_all);
LabelDraw sample_minority_labels(const data::ClassPriors& priors, std::size_t n, LabelMode mode,
                                 std::uint64_t seed, LabelFallback fallback = LabelFallback::uniform_all);

struct CriticObjective {
  double value = 0.0;
  nn::ParamGrads grads;       // d value / d critic parameters
  nn::Tensor fake_input_grad;  // d value / d fake critic inputs
};

/// S_D = sum over classes i of  p_i mean D(real | i) - (p_k - p_i) mean D(fake | i).
/// Either batch may have zero rows. Inputs are critic inputs (already
/// conditioned where the critic is conditional).
CriticObjective critic_objective(const nn::Network& d_net, const nn::Tensor& real, std::span<const int> real_labels,
                                 const nn::Tensor& fake, std::span<const int> fake_labels,
                                 const data::ClassPriors& priors);

struct Penalty {
  double value = 0.0;
  nn::ParamGrads grads;
};

/// mean over x = u real + (1 - u) fake of (||grad_x D(x)|| - 1)^2, with the
/// norm taken over the first `penalised_cols` columns (all when 0).
Penalty gradient_penalty(const nn::Network& d_net, const nn::Tensor& real, const nn::Tensor& fake, Rng& rng,
                         std::size_t penalised_cols = 0);
Penalty gradient_penalty(const nn::Network& d_net, const nn::Tensor& real, const nn::Tensor& fake,
                         std::uint64_t seed, std::size_t penalised_cols = 0);

struct ClassifierObjective {
  double value = 0.0;
  nn::ParamGrads grads;  // d value / d classifier parameters
  nn::Tensor input_grad;
  bool clamped = false;
};

/// Per sample of class i:  p_i log C_i + sum_{j != i} (p_k - p_j) log(1 - C_j),
/// averaged over the batch, with log arguments floored at 1e-12.
ClassifierObjective classifier_objective(const nn::Network& c_net, const nn::Tensor& batch,
                                         std::span<const int> labels, const data::ClassPriors& priors);

/// Value only, from probabilities. Returns {value, clamped}.
std::pair<double, bool> classifier_objective_value(const nn::Tensor& probs, std::span<const int> labels,
                                                   const data::ClassPriors& priors);

}  // namespace pgan::training
