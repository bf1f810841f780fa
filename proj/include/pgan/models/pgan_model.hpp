#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "pgan/common/rng.hpp"
#include "pgan/data/dataset.hpp"
#include "pgan/models/autoencoder.hpp"
#include "pgan/models/generator.hpp"
#include "pgan/nn/serialize.hpp"

namespace pgan::models {

struct PGanModel {
  nn::Network f_net;
  nn::Network c_net;
  nn::Network d_net;  // conditional: input is feature width + K
  GeneratorParams g;
  LatentConditioner conditioner;
  data::ClassPriors priors;
  std::string dataset_name;

  std::size_t num_classes() const { return priors.num_classes(); }
  std::size_t feature_dim() const { return g.bank.dim(); }
  void validate() const;
};

/// Generator samples in feature space for the given labels.
nn::Tensor sample_generator(const PGanModel& model, std::span<const int> labels, Rng& rng);

/// Checkpoint blob. Banks are stored as row indices into the training set,
/// so loading needs that dataset to rebuild the anchors.
nn::Blob to_blob(const PGanModel& model);
PGanModel from_blob(const nn::Blob& blob, const data::Dataset& train);

void save_checkpoint(const std::filesystem::path& path, const PGanModel& model);
PGanModel load_checkpoint(const std::filesystem::path& path, const data::Dataset& train);

}  // namespace pgan::models
