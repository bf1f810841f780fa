#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pgan/common/rng.hpp"
#include "pgan/nn/network.hpp"

namespace pgan::models {

/// Per-class anchor samples that the generator mixes over.
///
/// `rows[k]` indexes the training set; `anchors[k]` holds the matching
/// feature rows and is refreshed whenever the feature map changes.
struct ClassBank {
  std::vector<std::vector<std::size_t>> rows;
  std::vector<nn::Tensor> anchors;

  std::size_t num_classes() const { return rows.size(); }
  std::size_t size(int k) const { return rows.at(static_cast<std::size_t>(k)).size(); }
  /// Width of the generator's mixing head: the largest per-class bank.
  std::size_t slots() const;
  std::size_t dim() const;

  void refresh(const nn::Tensor& features);
};

/// Random bank of min(n_c, bank_size) distinct members per class.
ClassBank draw_bank(std::span<const int> labels, std::size_t num_classes, std::size_t bank_size, Rng& rng);

/// G = P(Q(z, k)) over a class bank.
///
/// Q maps z with the appended one-hot class to a hidden code; P maps that
/// code to softmax weights over `bank.slots()` slots. Slot j of class k
/// refers to anchor j mod B_k, so classes with smaller banks reuse anchors
/// and every output remains a convex combination of its own class.
struct GeneratorParams {
  nn::Network q_net;
  nn::Network p_head;
  ClassBank bank;
  std::size_t latent_dim = 0;
  std::size_t num_classes = 0;

  void validate() const;
};

GeneratorParams make_generator(std::size_t latent_dim, std::size_t num_classes, std::size_t hidden,
                               ClassBank bank, Rng& rng);

struct GeneratorSample {
  nn::Tensor sample;   // [d]
  nn::Tensor weights;  // [B_k], one weight per anchor
};

/// weights^T anchors.
nn::Tensor mix_anchors(const nn::Tensor& anchors, std::span<const double> weights);

GeneratorSample generator_forward(const GeneratorParams& g, std::span<const double> z, int k);

/// Batched pass retaining what generator_backward needs.
struct GeneratorPass {
  nn::Activations q;
  nn::Activations p;
  std::vector<int> labels;
  nn::Tensor samples;  // [n x d]
};

GeneratorPass generate(const GeneratorParams& g, const nn::Tensor& z, std::span<const int> labels);

struct GeneratorGrads {
  nn::ParamGrads q;
  nn::ParamGrads p;
};

/// Parameter gradients given d loss / d samples. Anchors are constants.
GeneratorGrads generator_backward(const GeneratorParams& g, const GeneratorPass& pass,
                                  const nn::Tensor& sample_grad);

}  // namespace pgan::models
