#include "pgan/models/autoencoder.hpp"

#include <cmath>
#include <numeric>

#include "pgan/common/error.hpp"
#include "pgan/nn/adam.hpp"
#include "pgan/nn/loss.hpp"

namespace pgan::models {
namespace {

double reconstruction_loss(const AutoencoderResult& ae, const nn::Tensor& x) {
  return nn::mean_squared_error(nn::predict(ae.decoder, nn::predict(ae.encoder, x)), x).value;
}

}  // namespace

LatentConditioner LatentConditioner::fit(const nn::Tensor& codes, std::span<const int> labels,
                                         std::size_t num_classes) {
  if (codes.rank() != 2 || codes.rows() != labels.size()) {
    throw DimensionError("LatentConditioner::fit: codes " + codes.shape_string() + " for " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t dim = codes.cols();
  LatentConditioner out{nn::Tensor::matrix(num_classes, dim), nn::Tensor::matrix(num_classes, dim)};
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto k = static_cast<std::size_t>(labels[r]);
    ++counts.at(k);
    for (std::size_t c = 0; c < dim; ++c) out.mean(k, c) += codes(r, c);
  }
  for (std::size_t k = 0; k < num_classes; ++k) {
    for (std::size_t c = 0; c < dim; ++c) out.mean(k, c) /= counts[k] > 0 ? static_cast<double>(counts[k]) : 1.0;
  }
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto k = static_cast<std::size_t>(labels[r]);
    for (std::size_t c = 0; c < dim; ++c) {
      const double dev = codes(r, c) - out.mean(k, c);
      out.variance(k, c) += dev * dev;
    }
  }
  for (std::size_t k = 0; k < num_classes; ++k) {
    for (std::size_t c = 0; c < dim; ++c) {
      const double v = counts[k] > 0 ? out.variance(k, c) / static_cast<double>(counts[k]) : 1.0;
      out.variance(k, c) = std::max(v, kVarianceFloor);
    }
  }
  return out;
}

nn::Tensor LatentConditioner::sample(std::span<const int> labels, std::size_t latent_dim, Rng& rng) const {
  if (fitted() && mean.cols() != latent_dim) {
    throw DimensionError("LatentConditioner::sample: fitted for " + std::to_string(mean.cols()) +
                         " latent dims, asked for " + std::to_string(latent_dim));
  }
  nn::Tensor z = nn::Tensor::matrix(labels.size(), latent_dim);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto k = static_cast<std::size_t>(labels[r]);
    if (fitted() && k >= mean.rows()) throw DomainError("LatentConditioner::sample: unknown class " + std::to_string(k));
    for (std::size_t c = 0; c < latent_dim; ++c) {
      const double e = rng.normal();
      z(r, c) = fitted() ? mean(k, c) + std::sqrt(variance(k, c)) * e : e;
    }
  }
  return z;
}

AutoencoderResult autoencoder_pretrain(const nn::Tensor& features, std::span<const int> labels,
                                       std::size_t num_classes, const AutoencoderConfig& cfg) {
  if (features.rank() != 2 || features.rows() == 0) {
    throw DomainError("autoencoder_pretrain: features must be a non-empty matrix");
  }
  if (features.rows() != labels.size()) throw DimensionError("autoencoder_pretrain: label count mismatch");
  if (cfg.batch_size == 0 || cfg.latent_dim == 0 || cfg.hidden == 0) {
    throw DomainError("autoencoder_pretrain: batch size, latent size and width must be positive");
  }
  const std::size_t d = features.cols();
  Rng rng(mix_seed(cfg.seed, 0xAE));
  AutoencoderResult ae;
  ae.encoder = nn::Network::build(d, {{cfg.hidden, nn::Activation::relu}, {cfg.latent_dim, nn::Activation::linear}}, rng);
  ae.decoder = nn::Network::build(cfg.latent_dim,
                                  {{cfg.hidden, nn::Activation::relu},
                                   {cfg.hidden, nn::Activation::relu},
                                   {d, nn::Activation::linear}},
                                  rng);
  const nn::AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
  auto enc_state = nn::AdamState::for_network(ae.encoder, adam);
  auto dec_state = nn::AdamState::for_network(ae.decoder, adam);

  ae.losses.push_back(reconstruction_loss(ae, features));
  std::vector<std::size_t> order(features.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const nn::Tensor x = features.gather_rows(std::span(order).subspan(start, end - start));
      try {
        const auto enc = nn::forward(ae.encoder, x);
        const auto dec = nn::forward(ae.decoder, enc.output());
        const auto loss = nn::mean_squared_error(dec.output(), x);
        if (!std::isfinite(loss.value)) throw NonFiniteError("reconstruction loss");
        const auto dec_back = nn::backward(ae.decoder, dec, loss.grad);
        const auto enc_back = nn::backward(ae.encoder, enc, dec_back.input);
        nn::adam_step(ae.decoder, dec_back.params, dec_state);
        nn::adam_step(ae.encoder, enc_back.params, enc_state);
      } catch (const NonFiniteError& e) {
        throw DivergenceError(std::string("autoencoder diverged (") + e.what() + "); try a lower learning rate",
                              epoch);
      }
    }
    ae.losses.push_back(reconstruction_loss(ae, features));
  }
  ae.conditioner = LatentConditioner::fit(nn::predict(ae.encoder, features), labels, num_classes);
  return ae;
}

GeneratorInit init_generator_from_ae(const AutoencoderResult& ae, const GeneratorParams& g) {
  GeneratorInit out{g, {}, {}, {}};
  auto& q_layers = out.generator.q_net.layers();
  const auto& dec_layers = ae.decoder.layers();
  for (std::size_t i = 0; i < q_layers.size() && i < dec_layers.size(); ++i) {
    auto& q = q_layers[i];
    const auto& dl = dec_layers[i];
    if (q.activation != dl.activation || q.out() != dl.out()) break;
    if (q.in() == dl.in()) {
      q.weight = dl.weight;
    } else if (i == 0 && q.in() == dl.in() + g.num_classes) {
      for (std::size_t r = 0; r < q.out(); ++r) {
        for (std::size_t c = 0; c < dl.in(); ++c) q.weight(r, c) = dl.weight(r, c);
      }
    } else {
      break;
    }
    q.bias = dl.bias;
    out.copied_layers.push_back(i);
  }
  if (out.copied_layers.empty()) {
    out.warnings.push_back("no generator layer matches the decoder; generator left at its random initialisation");
  }
  if (ae.conditioner.fitted() && ae.conditioner.mean.cols() == g.latent_dim) {
    out.conditioner = ae.conditioner;
  } else {
    out.warnings.push_back("latent size differs from the autoencoder; generator keeps standard-normal latents");
  }
  return out;
}

}  // namespace pgan::models
