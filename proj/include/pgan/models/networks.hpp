#pragma once

#include <span>
#include <vector>

#include "pgan/common/rng.hpp"
#include "pgan/nn/network.hpp"

namespace pgan::models {

/// Relu stack over the given widths. No widths gives the empty network,
/// which extract_features treats as the identity map.
nn::Network make_feature_extractor(std::size_t input_dim, const std::vector<std::size_t>& widths, Rng& rng);

/// d -> hidden (relu) -> K (softmax). A hidden width of 0 drops the hidden layer.
nn::Network make_classifier(std::size_t input_dim, std::size_t num_classes, std::size_t hidden, Rng& rng);

/// input -> hidden (relu) -> hidden (relu) -> 1 (linear).
nn::Network make_critic(std::size_t input_dim, std::size_t hidden, Rng& rng);

nn::Tensor extract_features(const nn::Network& f_net, const nn::Tensor& batch);

/// Unbounded critic scores, [n x 1].
nn::Tensor critic_score(const nn::Network& d_net, const nn::Tensor& batch);

/// Class probabilities, [n x K]; requires a softmax output layer.
nn::Tensor classify(const nn::Network& c_net, const nn::Tensor& batch);

/// Features with the one-hot label appended, the input layout of
/// class-conditional critics.
nn::Tensor conditional_input(const nn::Tensor& features, std::span<const int> labels, std::size_t num_classes);

/// Row-wise argmax.
std::vector<int> argmax_rows(const nn::Tensor& probs);

}  // namespace pgan::models
