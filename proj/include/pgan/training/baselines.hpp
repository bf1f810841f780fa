#pragma once

#include <span>

#include "pgan/common/rng.hpp"
#include "pgan/data/dataset.hpp"
#include "pgan/nn/network.hpp"
#include "pgan/training/config.hpp"

namespace pgan::training {

/// Generator and sigmoid discriminator trained on the log-loss min-max
/// game. `num_classes` is 0 for the unconditional model; otherwise the
/// one-hot label is appended to both networks' inputs.
struct GanModel {
  nn::Network g_net;
  nn::Network d_net;
  std::size_t latent_dim = 0;
  std::size_t num_classes = 0;
  LossCurve curve;
};

GanModel train_vanilla_gan(const data::Dataset& ds, const TrainingConfig& cfg);
GanModel train_cgan(const data::Dataset& ds, const TrainingConfig& cfg);

nn::Tensor sample_gan(const GanModel& gan, std::size_t n, Rng& rng);
nn::Tensor sample_gan(const GanModel& gan, std::span<const int> labels, Rng& rng);

/// Appends conditional GAN samples per class up to `target_counts`.
data::Dataset rebalance_with_gan(const data::Dataset& ds, const GanModel& gan,
                                 const std::vector<std::size_t>& target_counts, std::uint64_t seed);

}  // namespace pgan::training
