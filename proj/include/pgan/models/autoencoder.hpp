#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pgan/common/rng.hpp"
#include "pgan/models/generator.hpp"
#include "pgan/nn/network.hpp"

namespace pgan::models {

inline constexpr double kVarianceFloor = 1e-6;

/// Per-class diagonal Gaussians in latent space. Unfitted conditioners
/// sample the standard normal.
struct LatentConditioner {
  nn::Tensor mean;      // [K x L]
  nn::Tensor variance;  // [K x L]

  bool fitted() const { return !mean.empty(); }
  /// Fits mean and variance of each class from latent codes.
  static LatentConditioner fit(const nn::Tensor& codes, std::span<const int> labels, std::size_t num_classes);
  /// One latent row per label, [n x latent_dim].
  nn::Tensor sample(std::span<const int> labels, std::size_t latent_dim, Rng& rng) const;
};

struct AutoencoderConfig {
  std::size_t latent_dim = 8;
  std::size_t hidden = 32;
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct AutoencoderResult {
  nn::Network encoder;  // d -> hidden -> L
  nn::Network decoder;  // L -> hidden -> hidden -> d
  LatentConditioner conditioner;
  /// Mean reconstruction loss of the whole set, before training and after
  /// every epoch.
  std::vector<double> losses;
};

/// Trains on all classes jointly, then fits the class-conditional latent
/// Gaussians from the encoder outputs. Labels are used for that fit only.
AutoencoderResult autoencoder_pretrain(const nn::Tensor& features, std::span<const int> labels,
                                       std::size_t num_classes, const AutoencoderConfig& cfg);

struct GeneratorInit {
  GeneratorParams generator;
  LatentConditioner conditioner;
  /// Indices of q_net layers that received decoder weights.
  std::vector<std::size_t> copied_layers;
  std::vector<std::string> warnings;
};

/// Copies the leading decoder layers into q_net while shapes agree. The
/// first q_net layer also sees the one-hot class, so only its latent
/// columns are copied. The conditioner is carried over when the latent
/// sizes agree.
GeneratorInit init_generator_from_ae(const AutoencoderResult& ae, const GeneratorParams& g);

}  // namespace pgan::models
