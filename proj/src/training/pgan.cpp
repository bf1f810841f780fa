#include "pgan/training/pgan.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "pgan/data/sampling.hpp"
#include "pgan/models/networks.hpp"
#include "pgan/nn/loss.hpp"
#include "pgan/training/objectives.hpp"

namespace pgan::training {
namespace {

constexpr double kDivergenceLimit = 1e6;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nn::AdamConfig adam_config(const TrainingConfig& cfg) { return {cfg.lr, cfg.beta1, cfg.beta2, 1e-8}; }

bool diverged(double v) { return !std::isfinite(v) || std::abs(v) > kDivergenceLimit; }

// Minibatches of a shuffled pass; a trailing batch of one row is dropped.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order.begin(), order.end());
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    if (end - start < 2) break;
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<int> gather_labels(const data::Dataset& ds, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(ds.labels[r]);
  return out;
}

}  // namespace

nn::Tensor Classifier::probabilities(const nn::Tensor& raw) const {
  return models::classify(c_net, models::extract_features(f_net, raw));
}

std::vector<int> Classifier::predict(const nn::Tensor& raw) const { return models::argmax_rows(probabilities(raw)); }

ClassifierFit fit_classifier(const data::Dataset& ds, Classifier start, const TrainingConfig& cfg,
                             std::size_t epochs, std::uint64_t stream) {
  cfg.validate();
  ClassifierFit fit{std::move(start), {}};
  Rng rng(mix_seed(cfg.seed, stream));
  const bool train_f = !fit.classifier.f_net.empty();
  auto f_state = nn::AdamState::for_network(fit.classifier.f_net, adam_config(cfg));
  auto c_state = nn::AdamState::for_network(fit.classifier.c_net, adam_config(cfg));
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t iteration = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    for (const auto& rows : epoch_batches(ds.size(), cfg.batch_size, rng)) {
      ++iteration;
      const nn::Tensor x = ds.features.gather_rows(rows);
      const auto labels = gather_labels(ds, rows);
      double ce = kNaN;
      try {
        const auto f_acts = nn::forward(fit.classifier.f_net, x);
        const auto c_acts = nn::forward(fit.classifier.c_net, f_acts.output());
        const auto loss = nn::cross_entropy(c_acts.output(), labels);
        ce = loss.value;
        const auto c_back = nn::backward(fit.classifier.c_net, c_acts, loss.grad);
        if (train_f) {
          const auto f_back = nn::backward(fit.classifier.f_net, f_acts, c_back.input);
          nn::adam_step(fit.classifier.f_net, f_back.params, f_state);
        }
        nn::adam_step(fit.classifier.c_net, c_back.params, c_state);
      } catch (const NonFiniteError& e) {
        throw TrainingDivergence(std::string("classifier training diverged: ") + e.what(), iteration, fit.curve);
      }
      const LossRecord rec{iteration, kNaN, kNaN, ce, elapsed_ms(t0)};
      if (diverged(ce)) {
        throw TrainingDivergence("classifier loss diverged at iteration " + std::to_string(iteration), iteration,
                                 fit.curve);
      }
      fit.curve.append(rec);
    }
  }
  return fit;
}

ClassifierFit train_plain_classifier(const data::Dataset& ds, const TrainingConfig& cfg) {
  cfg.validate();
  ds.validate();
  Rng init(mix_seed(cfg.seed, 0));
  Classifier start;
  start.f_net = models::make_feature_extractor(ds.dim(), cfg.feature_widths, init);
  const std::size_t d_f = cfg.feature_widths.empty() ? ds.dim() : cfg.feature_widths.back();
  start.c_net = models::make_classifier(d_f, ds.num_classes, cfg.hidden, init);
  return fit_classifier(ds, std::move(start), cfg, cfg.classifier_epochs, 3);
}

PGanTrainer::PGanTrainer(const data::Dataset& ds, const TrainingConfig& cfg)
    : ds_(ds), cfg_(cfg), rng_(mix_seed(cfg.seed, 1)) {
  cfg_.validate();
  ds_.validate();
  const std::size_t k = ds.num_classes;
  if (k < 2) throw DomainError("pgan_train needs at least two classes");
  const auto counts = ds.class_counts();
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] < 2) throw DomainError("pgan_train: class " + std::to_string(c) + " has fewer than 2 samples");
  }
  class_rows_.resize(k);
  for (std::size_t r = 0; r < ds.size(); ++r) class_rows_[static_cast<std::size_t>(ds.labels[r])].push_back(r);

  Rng init(mix_seed(cfg.seed, 0));
  model_.dataset_name = ds.name;
  model_.priors = data::class_priors(ds);
  model_.f_net = models::make_feature_extractor(ds.dim(), cfg.feature_widths, init);
  const std::size_t d_f = cfg.feature_widths.empty() ? ds.dim() : cfg.feature_widths.back();
  model_.c_net = models::make_classifier(d_f, k, cfg.hidden, init);
  model_.d_net = models::make_critic(d_f + k, cfg.hidden, init);

  if (!model_.f_net.empty() && cfg.feature_warmup_epochs > 0) {
    auto fit = fit_classifier(ds, {model_.f_net, model_.c_net}, cfg, cfg.feature_warmup_epochs, 4);
    model_.f_net = std::move(fit.classifier.f_net);
    model_.c_net = std::move(fit.classifier.c_net);
  }

  auto bank = models::draw_bank(ds.labels, k, cfg.bank_size, init);
  const nn::Tensor all_features = features(ds.features);
  bank.refresh(all_features);
  model_.g = models::make_generator(cfg.latent_dim, k, cfg.hidden, std::move(bank), init);

  if (cfg.ae_epochs > 0) {
    models::AutoencoderConfig ae_cfg{cfg.latent_dim, cfg.hidden, cfg.ae_epochs, cfg.batch_size, cfg.ae_lr,
                                     mix_seed(cfg.seed, 2)};
    const auto ae = models::autoencoder_pretrain(all_features, ds.labels, k, ae_cfg);
    auto gi = models::init_generator_from_ae(ae, model_.g);
    model_.g = std::move(gi.generator);
    model_.conditioner = std::move(gi.conditioner);
    notes_.insert(notes_.end(), gi.warnings.begin(), gi.warnings.end());
  }

  const auto adam = adam_config(cfg);
  f_state_ = nn::AdamState::for_network(model_.f_net, adam);
  c_state_ = nn::AdamState::for_network(model_.c_net, adam);
  d_state_ = nn::AdamState::for_network(model_.d_net, adam);
  q_state_ = nn::AdamState::for_network(model_.g.q_net, adam);
  p_state_ = nn::AdamState::for_network(model_.g.p_head, adam);
  model_.validate();
}

nn::Tensor PGanTrainer::features(const nn::Tensor& raw) const { return models::extract_features(model_.f_net, raw); }

void PGanTrainer::redraw_bank() {
  model_.g.bank.rows = models::draw_bank(ds_.labels, ds_.num_classes, cfg_.bank_size, rng_).rows;
  refresh_bank();
}

void PGanTrainer::refresh_bank() {
  auto& bank = model_.g.bank;
  for (std::size_t k = 0; k < bank.num_classes(); ++k) {
    bank.anchors[k] = features(ds_.features.gather_rows(bank.rows[k]));
  }
}

double PGanTrainer::feature_loss(const nn::Tensor& raw, std::span<const int> labels) const {
  return nn::cross_entropy(models::classify(model_.c_net, features(raw)), labels).value;
}

double PGanTrainer::feature_step(const nn::Tensor& raw, std::span<const int> labels) {
  const auto f_acts = nn::forward(model_.f_net, raw);
  const auto c_acts = nn::forward(model_.c_net, f_acts.output());
  const auto loss = nn::cross_entropy(c_acts.output(), labels);
  if (!model_.f_net.empty()) {
    const auto c_back = nn::backward(model_.c_net, c_acts, loss.grad);
    const auto f_back = nn::backward(model_.f_net, f_acts, c_back.input);
    nn::adam_step(model_.f_net, f_back.params, f_state_);
  }
  return loss.value;
}

double PGanTrainer::classifier_step(const nn::Tensor& feats, std::span<const int> labels) {
  const auto obj = classifier_objective(model_.c_net, feats, labels, model_.priors);
  nn::adam_step(model_.c_net, obj.grads, c_state_, nn::Direction::ascend);
  return obj.value;
}

double PGanTrainer::critic_step(const nn::Tensor& real_feats, std::span<const int> real_labels,
                                const nn::Tensor& fake_feats, std::span<const int> fake_labels) {
  const std::size_t k = ds_.num_classes;
  const std::size_t d_f = model_.feature_dim();
  const auto cond = [&](const nn::Tensor& f, std::span<const int> y) {
    return y.empty() ? nn::Tensor::matrix(0, d_f + k) : models::conditional_input(f, y, k);
  };
  const nn::Tensor fake_in = cond(fake_feats, fake_labels);
  auto obj = critic_objective(model_.d_net, cond(real_feats, real_labels), real_labels, fake_in, fake_labels,
                              model_.priors);
  double value = obj.value;
  if (!fake_labels.empty() && cfg_.lipschitz == Lipschitz::gradient_penalty && cfg_.gp_lambda > 0.0) {
    // Real partners of the same class as each fake row.
    std::vector<std::size_t> partners;
    partners.reserve(fake_labels.size());
    for (int y : fake_labels) {
      const auto& rows = class_rows_[static_cast<std::size_t>(y)];
      partners.push_back(rows[rng_.index(rows.size())]);
    }
    const nn::Tensor real_in = models::conditional_input(features(ds_.features.gather_rows(partners)), fake_labels, k);
    const auto pen = gradient_penalty(model_.d_net, real_in, fake_in, rng_, d_f);
    value -= cfg_.gp_lambda * pen.value;
    obj.grads.add_scaled(pen.grads, -cfg_.gp_lambda);
  }
  nn::adam_step(model_.d_net, obj.grads, d_state_, nn::Direction::ascend);
  if (cfg_.lipschitz == Lipschitz::weight_clipping) {
    for (auto& layer : model_.d_net.layers()) {
      for (double& w : layer.weight.values()) w = std::clamp(w, -cfg_.clip_value, cfg_.clip_value);
      for (double& b : layer.bias.values()) b = std::clamp(b, -cfg_.clip_value, cfg_.clip_value);
    }
  }
  return value;
}

namespace {

struct GeneratorObjective {
  double value = 0.0;
  models::GeneratorGrads grads;
};

GeneratorObjective generator_objective(const models::PGanModel& m, const TrainingConfig& cfg, const nn::Tensor& z,
                                       std::span<const int> labels, bool with_grads) {
  const std::size_t k = m.num_classes();
  const std::size_t d_f = m.feature_dim();
  const auto pass = models::generate(m.g, z, labels);
  const auto c_obj = classifier_objective(m.c_net, pass.samples, labels, m.priors);
  const auto d_acts = nn::forward(m.d_net, models::conditional_input(pass.samples, labels, k));
  const double n = static_cast<double>(labels.size());
  double mean_d = 0.0;
  for (std::size_t r = 0; r < labels.size(); ++r) mean_d += d_acts.output()[r] / n;

  GeneratorObjective out;
  out.value = cfg.lambda_C * c_obj.value - cfg.lambda_D * mean_d;
  if (!with_grads) return out;
  const auto d_back = nn::backward(m.d_net, d_acts, nn::Tensor::matrix(labels.size(), 1, 1.0 / n));
  nn::Tensor sample_grad = nn::Tensor::matrix(labels.size(), d_f);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    for (std::size_t c = 0; c < d_f; ++c) {
      sample_grad(r, c) = cfg.lambda_C * c_obj.input_grad(r, c) - cfg.lambda_D * d_back.input(r, c);
    }
  }
  out.grads = models::generator_backward(m.g, pass, sample_grad);
  return out;
}

}  // namespace

double PGanTrainer::generator_loss(const nn::Tensor& z, std::span<const int> labels) const {
  return generator_objective(model_, cfg_, z, labels, false).value;
}

double PGanTrainer::generator_step(const nn::Tensor& z, std::span<const int> labels) {
  auto obj = generator_objective(model_, cfg_, z, labels, true);
  nn::adam_step(model_.g.q_net, obj.grads.q, q_state_);
  nn::adam_step(model_.g.p_head, obj.grads.p, p_state_);
  return obj.value;
}

LossRecord PGanTrainer::iterate(std::span<const std::size_t> rows) {
  const auto t0 = std::chrono::steady_clock::now();
  nn::Tensor raw = ds_.features.gather_rows(rows);
  if (cfg_.jitter > 0.0) {
    for (double& v : raw.values()) v += rng_.normal(0.0, cfg_.jitter);
  }
  const auto labels = gather_labels(ds_, rows);
  const std::size_t n = rows.size();
  const std::size_t latent = model_.g.latent_dim;

  feature_step(raw, labels);
  if (!model_.f_net.empty()) refresh_bank();
  const nn::Tensor feats = features(raw);

  LossRecord rec;
  for (std::size_t j = 0; j < cfg_.j_steps; ++j) {
    rec.loss_C = classifier_step(feats, labels);
    const double d_real = critic_step(feats, labels, nn::Tensor::matrix(0, feats.cols()), {});

    const auto gap = sample_minority_labels(model_.priors, n, LabelMode::prior_gap, rng_,
                                            cfg_.label_sampling_fallback);
    const nn::Tensor fakes =
        models::generate(model_.g, model_.conditioner.sample(gap.labels, latent, rng_), gap.labels).samples;
    classifier_step(fakes, gap.labels);
    const double d_fake = critic_step(nn::Tensor::matrix(0, feats.cols()), {}, fakes, gap.labels);
    rec.loss_D = d_real + d_fake;

    const auto minority = sample_minority_labels(model_.priors, n, LabelMode::uniform_minority, rng_);
    rec.loss_G = generator_step(model_.conditioner.sample(minority.labels, latent, rng_), minority.labels);
  }
  rec.wall_ms = elapsed_ms(t0);
  return rec;
}

void PGanTrainer::train(const TrainObserver& observer) {
  if (observer.on_start) observer.on_start(model_);
  std::size_t iteration = curve_.empty() ? 0 : curve_.records().back().iteration;
  double clock = curve_.empty() ? 0.0 : curve_.records().back().wall_ms;
  for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
    redraw_bank();
    for (const auto& rows : epoch_batches(ds_.size(), cfg_.batch_size, rng_)) {
      ++iteration;
      LossRecord rec;
      try {
        rec = iterate(rows);
      } catch (const NonFiniteError& e) {
        throw TrainingDivergence("training diverged at iteration " + std::to_string(iteration) + ": " + e.what(),
                                 iteration, curve_);
      }
      rec.iteration = iteration;
      clock += rec.wall_ms;
      rec.wall_ms = clock;
      if (diverged(rec.loss_G) || diverged(rec.loss_D) || diverged(rec.loss_C)) {
        throw TrainingDivergence("loss diverged at iteration " + std::to_string(iteration) +
                                     " (limit 1e6 or non-finite)",
                                 iteration, curve_);
      }
      curve_.append(rec);
      if (observer.on_iteration) observer.on_iteration(iteration, model_);
    }
  }
}

PGanResult pgan_train(const data::Dataset& ds, const TrainingConfig& cfg, const TrainObserver& observer) {
  PGanTrainer trainer(ds, cfg);
  trainer.train(observer);
  return {trainer.model(), trainer.curve(), trainer.notes()};
}

data::Dataset rebalance_dataset(const data::Dataset& ds, const models::PGanModel& model,
                                const std::vector<std::size_t>& target_counts, std::uint64_t seed) {
  const auto counts = ds.class_counts();
  if (target_counts.size() != counts.size()) {
    throw DimensionError("rebalance_dataset: " + std::to_string(target_counts.size()) + " targets for " +
                         std::to_string(counts.size()) + " classes");
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (target_counts[c] < counts[c]) {
      throw DomainError("rebalance_dataset: target " + std::to_string(target_counts[c]) + " for class " +
                        std::to_string(c) + " is below its current count " + std::to_string(counts[c]));
    }
  }
  data::Dataset out = ds;
  out.features = models::extract_features(model.f_net, ds.features);
  out.feature_space = data::FeatureSpace::extracted;
  out.image_shape.reset();
  out.synthetic.assign(ds.size(), 0);
  Rng rng(seed);
  constexpr std::size_t kChunk = 256;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    std::size_t deficit = target_counts[c] - counts[c];
    while (deficit > 0) {
      const std::size_t m = std::min(deficit, kChunk);
      const std::vector<int> labels(m, static_cast<int>(c));
      out.features.append_rows(models::sample_generator(model, labels, rng));
      out.labels.insert(out.labels.end(), labels.begin(), labels.end());
      out.synthetic.insert(out.synthetic.end(), m, 1);
      deficit -= m;
    }
  }
  return out;
}

data::Dataset rebalance_dataset(const data::Dataset& ds, const models::PGanModel& model, std::uint64_t seed) {
  return rebalance_dataset(ds, model, data::equalized_counts(ds), seed);
}

std::string_view to_string(EvalMode m) { return m == EvalMode::adversarial_c ? "adversarial-c" : "retrained-c"; }

Classifier pgan_classifier(const data::Dataset& train, const models::PGanModel& model, EvalMode mode,
                           const TrainingConfig& cfg) {
  if (mode == EvalMode::adversarial_c) return {model.f_net, model.c_net};
  const auto balanced = rebalance_dataset(train, model, mix_seed(cfg.seed, 5));
  Rng init(mix_seed(cfg.seed, 6));
  Classifier start{nn::Network{}, models::make_classifier(balanced.dim(), balanced.num_classes, cfg.hidden, init)};
  auto fit = fit_classifier(balanced, std::move(start), cfg, cfg.classifier_epochs, 7);
  return {model.f_net, std::move(fit.classifier.c_net)};
}

}  // namespace pgan::training
