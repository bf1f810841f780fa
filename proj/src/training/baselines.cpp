#include "pgan/training/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "pgan/common/error.hpp"
#include "pgan/nn/adam.hpp"
#include "pgan/nn/loss.hpp"
#include "pgan/training/pgan.hpp"

namespace pgan::training {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nn::Tensor gan_input(const nn::Tensor& x, std::span<const int> labels, std::size_t num_classes) {
  return num_classes == 0 ? x : nn::hconcat(x, nn::one_hot(labels, num_classes));
}

nn::Tensor latent(std::size_t n, std::size_t dim, Rng& rng) {
  nn::Tensor z = nn::Tensor::matrix(n, dim);
  for (double& v : z.values()) v = rng.normal();
  return z;
}

// d/d out of  mean log D  (real, sign +1)  or  mean log(1 - D)  (fake, sign -1).
nn::Tensor log_loss_grad(const nn::Tensor& d_out, bool real) {
  nn::Tensor g(d_out.shape(), 0.0);
  const double n = static_cast<double>(d_out.rows());
  for (std::size_t i = 0; i < d_out.size(); ++i) {
    g[i] = real ? 1.0 / (std::max(d_out[i], nn::kLogFloor) * n) : -1.0 / (std::max(1.0 - d_out[i], nn::kLogFloor) * n);
  }
  return g;
}

double log_loss_value(const nn::Tensor& d_out, bool real) {
  double v = 0.0;
  for (std::size_t i = 0; i < d_out.size(); ++i) {
    v += std::log(std::max(real ? d_out[i] : 1.0 - d_out[i], nn::kLogFloor));
  }
  return v / static_cast<double>(d_out.size());
}

GanModel train_gan(const data::Dataset& ds, const TrainingConfig& cfg, bool conditional) {
  cfg.validate();
  ds.validate();
  if (ds.size() < 2) throw DomainError("GAN training needs at least two samples");
  const std::size_t k = conditional ? ds.num_classes : 0;
  const std::size_t d = ds.dim();
  const std::size_t h = cfg.hidden;
  Rng init(mix_seed(cfg.seed, conditional ? 12 : 11));
  Rng rng(mix_seed(cfg.seed, conditional ? 14 : 13));

  GanModel gan;
  gan.latent_dim = cfg.latent_dim;
  gan.num_classes = k;
  gan.g_net = nn::Network::build(cfg.latent_dim + k,
                                 {{h, nn::Activation::relu}, {h, nn::Activation::relu}, {d, nn::Activation::linear}},
                                 init);
  gan.d_net = nn::Network::build(d + k,
                                 {{h, nn::Activation::relu}, {h, nn::Activation::relu}, {1, nn::Activation::sigmoid}},
                                 init);
  const nn::AdamConfig adam{cfg.lr, cfg.beta1, cfg.beta2, 1e-8};
  auto g_state = nn::AdamState::for_network(gan.g_net, adam);
  auto d_state = nn::AdamState::for_network(gan.d_net, adam);

  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t iteration = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start + 2 <= order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const auto rows = std::span(order).subspan(start, end - start);
      const std::size_t n = rows.size();
      ++iteration;
      std::vector<int> labels;
      for (auto r : rows) labels.push_back(ds.labels[r]);
      LossRecord rec{iteration, kNaN, kNaN, kNaN, 0.0};
      try {
        // Discriminator ascends  mean log D(x) + mean log(1 - D(G(z))).
        const nn::Tensor real_in = gan_input(ds.features.gather_rows(rows), labels, k);
        const nn::Tensor fake = nn::predict(gan.g_net, gan_input(latent(n, cfg.latent_dim, rng), labels, k));
        const auto real_acts = nn::forward(gan.d_net, real_in);
        const auto fake_acts = nn::forward(gan.d_net, gan_input(fake, labels, k));
        rec.loss_D = log_loss_value(real_acts.output(), true) + log_loss_value(fake_acts.output(), false);
        auto grads = nn::backward(gan.d_net, real_acts, log_loss_grad(real_acts.output(), true)).params;
        grads.add_scaled(nn::backward(gan.d_net, fake_acts, log_loss_grad(fake_acts.output(), false)).params, 1.0);
        nn::adam_step(gan.d_net, grads, d_state, nn::Direction::ascend);

        // Generator descends  -mean log D(G(z)).
        const auto g_acts = nn::forward(gan.g_net, gan_input(latent(n, cfg.latent_dim, rng), labels, k));
        const auto d_acts = nn::forward(gan.d_net, gan_input(g_acts.output(), labels, k));
        rec.loss_G = -log_loss_value(d_acts.output(), true);
        nn::Tensor up = log_loss_grad(d_acts.output(), true);
        for (double& v : up.values()) v = -v;
        const auto d_back = nn::backward(gan.d_net, d_acts, up);
        nn::Tensor g_grad = nn::Tensor::matrix(n, d);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t c = 0; c < d; ++c) g_grad(r, c) = d_back.input(r, c);
        }
        nn::adam_step(gan.g_net, nn::backward(gan.g_net, g_acts, g_grad).params, g_state);
      } catch (const NonFiniteError& e) {
        throw TrainingDivergence(std::string("GAN training diverged: ") + e.what(), iteration, gan.curve);
      }
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      if (!std::isfinite(rec.loss_D) || !std::isfinite(rec.loss_G) || std::abs(rec.loss_D) > 1e6 ||
          std::abs(rec.loss_G) > 1e6) {
        throw TrainingDivergence("GAN loss diverged at iteration " + std::to_string(iteration), iteration, gan.curve);
      }
      gan.curve.append(rec);
    }
  }
  return gan;
}

}  // namespace

GanModel train_vanilla_gan(const data::Dataset& ds, const TrainingConfig& cfg) { return train_gan(ds, cfg, false); }

GanModel train_cgan(const data::Dataset& ds, const TrainingConfig& cfg) { return train_gan(ds, cfg, true); }

nn::Tensor sample_gan(const GanModel& gan, std::size_t n, Rng& rng) {
  if (gan.num_classes != 0) throw DomainError("sample_gan: conditional model needs labels");
  return nn::predict(gan.g_net, latent(n, gan.latent_dim, rng));
}

nn::Tensor sample_gan(const GanModel& gan, std::span<const int> labels, Rng& rng) {
  if (gan.num_classes == 0) throw DomainError("sample_gan: unconditional model takes no labels");
  return nn::predict(gan.g_net, gan_input(latent(labels.size(), gan.latent_dim, rng), labels, gan.num_classes));
}

data::Dataset rebalance_with_gan(const data::Dataset& ds, const GanModel& gan,
                                 const std::vector<std::size_t>& target_counts, std::uint64_t seed) {
  const auto counts = ds.class_counts();
  if (target_counts.size() != counts.size()) throw DimensionError("rebalance_with_gan: target size mismatch");
  data::Dataset out = ds;
  out.synthetic.resize(ds.size(), 0);
  Rng rng(seed);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (target_counts[c] < counts[c]) {
      throw DomainError("rebalance_with_gan: target for class " + std::to_string(c) + " is below its count");
    }
    const std::vector<int> labels(target_counts[c] - counts[c], static_cast<int>(c));
    if (labels.empty()) continue;
    out.features.append_rows(sample_gan(gan, labels, rng));
    out.labels.insert(out.labels.end(), labels.begin(), labels.end());
    out.synthetic.insert(out.synthetic.end(), labels.size(), 1);
  }
  return out;
}

}  // namespace pgan::training
