#include "pgan/models/pgan_model.hpp"

#include <sstream>

#include "pgan/common/error.hpp"
#include "pgan/models/networks.hpp"

namespace pgan::models {
namespace {

std::string meta_value(const std::string& meta, const std::string& key) {
  std::istringstream in(meta);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  }
  throw FormatError("checkpoint metadata lacks '" + key + "'");
}

std::size_t meta_size(const std::string& meta, const std::string& key) {
  try {
    return std::stoull(meta_value(meta, key));
  } catch (const std::logic_error&) {
    throw FormatError("checkpoint metadata '" + key + "' is not a count");
  }
}

}  // namespace

void PGanModel::validate() const {
  g.validate();
  const std::size_t k = num_classes();
  if (c_net.output_size() != k || c_net.output_activation() != nn::Activation::softmax) {
    throw ConsistencyError("classifier must have " + std::to_string(k) + " softmax outputs");
  }
  if (d_net.output_size() != 1 || d_net.output_activation() != nn::Activation::linear) {
    throw ConsistencyError("critic must have a single linear output");
  }
  if (g.num_classes != k) throw ConsistencyError("generator and priors disagree on the class count");
  if (d_net.input_size() != feature_dim() + k) {
    throw ConsistencyError("critic input width " + std::to_string(d_net.input_size()) + " is not feature width " +
                           std::to_string(feature_dim()) + " + " + std::to_string(k));
  }
  if (c_net.input_size() != feature_dim()) throw ConsistencyError("classifier input width differs from features");
}

nn::Tensor sample_generator(const PGanModel& model, std::span<const int> labels, Rng& rng) {
  const nn::Tensor z = model.conditioner.sample(labels, model.g.latent_dim, rng);
  return generate(model.g, z, labels).samples;
}

nn::Blob to_blob(const PGanModel& model) {
  nn::Blob blob;
  std::ostringstream meta;
  meta << "dataset=" << model.dataset_name << "\n"
       << "latent_dim=" << model.g.latent_dim << "\n"
       << "num_classes=" << model.num_classes() << "\n"
       << "feature_dim=" << model.feature_dim() << "\n";
  blob.put("meta", meta.str());
  blob.put("F", model.f_net);
  blob.put("C", model.c_net);
  blob.put("D", model.d_net);
  blob.put("Q", model.g.q_net);
  blob.put("P", model.g.p_head);
  blob.put("priors", model.priors.priors);
  blob.put("prior_order", nn::Blob::Indices(model.priors.ascending_order.begin(), model.priors.ascending_order.end()));
  for (std::size_t k = 0; k < model.g.bank.num_classes(); ++k) {
    const auto& rows = model.g.bank.rows[k];
    blob.put("bank." + std::to_string(k), nn::Blob::Indices(rows.begin(), rows.end()));
  }
  const auto flat = [](const nn::Tensor& t) { return std::vector<double>(t.values().begin(), t.values().end()); };
  blob.put("latent.mean", model.conditioner.fitted() ? flat(model.conditioner.mean) : std::vector<double>{});
  blob.put("latent.var", model.conditioner.fitted() ? flat(model.conditioner.variance) : std::vector<double>{});
  return blob;
}

PGanModel from_blob(const nn::Blob& blob, const data::Dataset& train) {
  const std::string& meta = blob.text("meta");
  PGanModel m;
  m.dataset_name = meta_value(meta, "dataset");
  if (m.dataset_name != train.name) {
    throw ConsistencyError("checkpoint was trained on '" + m.dataset_name + "', not '" + train.name + "'");
  }
  const std::size_t k = meta_size(meta, "num_classes");
  const std::size_t latent = meta_size(meta, "latent_dim");
  m.f_net = blob.network("F");
  m.c_net = blob.network("C");
  m.d_net = blob.network("D");
  m.priors.priors = blob.doubles("priors");
  for (auto v : blob.indices("prior_order")) m.priors.ascending_order.push_back(static_cast<int>(v));
  if (m.priors.priors.size() != k || m.priors.ascending_order.size() != k) {
    throw FormatError("checkpoint priors do not cover " + std::to_string(k) + " classes");
  }

  m.g.q_net = blob.network("Q");
  m.g.p_head = blob.network("P");
  m.g.latent_dim = latent;
  m.g.num_classes = k;
  m.g.bank.rows.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    for (auto r : blob.indices("bank." + std::to_string(c))) {
      if (r >= train.size() || train.labels[r] != static_cast<int>(c)) {
        throw ConsistencyError("checkpoint bank row " + std::to_string(r) + " is not a class " + std::to_string(c) +
                               " row of '" + train.name + "'");
      }
      m.g.bank.rows[c].push_back(static_cast<std::size_t>(r));
    }
  }
  m.g.bank.refresh(extract_features(m.f_net, train.features));

  const auto& mean = blob.doubles("latent.mean");
  const auto& var = blob.doubles("latent.var");
  if (!mean.empty()) {
    if (mean.size() != k * latent || var.size() != k * latent) throw FormatError("checkpoint latent statistics size");
    m.conditioner.mean = nn::Tensor({k, latent}, mean);
    m.conditioner.variance = nn::Tensor({k, latent}, var);
  }
  m.validate();
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const PGanModel& model) {
  nn::save_blob(path, to_blob(model));
}

PGanModel load_checkpoint(const std::filesystem::path& path, const data::Dataset& train) {
  return from_blob(nn::load_blob(path), train);
}

}  // namespace pgan::models
