#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pgan/common/error.hpp"
#include "pgan/common/rng.hpp"
#include "pgan/data/dataset.hpp"
#include "pgan/models/pgan_model.hpp"
#include "pgan/nn/adam.hpp"
#include "pgan/training/config.hpp"

namespace pgan::training {

/// Divergence that also carries the curve recorded up to the last finite
/// iteration.
class TrainingDivergence : public DivergenceError {
 public:
  TrainingDivergence(const std::string& what, std::size_t iteration, LossCurve curve)
      : DivergenceError(what, iteration), curve_(std::move(curve)) {}
  const LossCurve& curve() const noexcept { return curve_; }

 private:
  LossCurve curve_;
};

/// Optional callbacks invoked before the first update and after every
/// outer iteration.
struct TrainObserver {
  std::function<void(const models::PGanModel&)> on_start;
  std::function<void(std::size_t iteration, const models::PGanModel&)> on_iteration;
};

/// Feature extractor and classifier used together for prediction.
struct Classifier {
  nn::Network f_net;
  nn::Network c_net;

  nn::Tensor probabilities(const nn::Tensor& raw) const;
  std::vector<int> predict(const nn::Tensor& raw) const;
};

struct ClassifierFit {
  Classifier classifier;
  LossCurve curve;
};

/// Cross-entropy minibatch training of F (when it has layers) and C.
ClassifierFit fit_classifier(const data::Dataset& ds, Classifier start, const TrainingConfig& cfg,
                             std::size_t epochs, std::uint64_t stream);

/// Fresh F and C trained on `ds` with cross-entropy for cfg.classifier_epochs.
ClassifierFit train_plain_classifier(const data::Dataset& ds, const TrainingConfig& cfg);

/// Adversarial training of the four networks.
///
/// Construction builds F, C, D and G, runs the optional F + C warm-up and
/// the autoencoder initialisation of G. Each outer iteration then takes one
/// minibatch through: an F step on cross-entropy with C fixed, followed by
/// j_steps rounds of (C and D ascend on the real batch; C and D ascend on
/// generated samples with prior-gap labels; G descends against C and D on
/// samples with uniform minority labels).
class PGanTrainer {
 public:
  PGanTrainer(const data::Dataset& ds, const TrainingConfig& cfg);

  const models::PGanModel& model() const noexcept { return model_; }
  models::PGanModel& model() noexcept { return model_; }
  const LossCurve& curve() const noexcept { return curve_; }
  const std::vector<std::string>& notes() const noexcept { return notes_; }
  const TrainingConfig& config() const noexcept { return cfg_; }
  Rng& rng() noexcept { return rng_; }

  /// Runs cfg.epochs epochs; throws TrainingDivergence.
  void train(const TrainObserver& observer = {});

  /// One outer iteration on the given training rows (not recorded).
  LossRecord iterate(std::span<const std::size_t> rows);

  nn::Tensor features(const nn::Tensor& raw) const;
  /// Redraws the bank rows and refreshes the anchors.
  void redraw_bank();
  /// Recomputes anchors from the current feature extractor.
  void refresh_bank();

  // Single updates. Each returns the objective evaluated before the step.
  /// F descends cross-entropy of C(F(x)); a no-op without F layers.
  double feature_step(const nn::Tensor& raw, std::span<const int> labels);
  /// C ascends S_C.
  double classifier_step(const nn::Tensor& feats, std::span<const int> labels);
  /// D ascends S_D, minus the weighted gradient penalty when fakes are given.
  double critic_step(const nn::Tensor& real_feats, std::span<const int> real_labels, const nn::Tensor& fake_feats,
                     std::span<const int> fake_labels);
  /// G descends lambda_C S_C - lambda_D mean D on its samples.
  double generator_step(const nn::Tensor& z, std::span<const int> labels);

  double generator_loss(const nn::Tensor& z, std::span<const int> labels) const;
  double feature_loss(const nn::Tensor& raw, std::span<const int> labels) const;

 private:
  const data::Dataset& ds_;
  TrainingConfig cfg_;
  Rng rng_;
  models::PGanModel model_;
  nn::AdamState f_state_;
  nn::AdamState c_state_;
  nn::AdamState d_state_;
  nn::AdamState q_state_;
  nn::AdamState p_state_;
  std::vector<std::vector<std::size_t>> class_rows_;
  LossCurve curve_;
  std::vector<std::string> notes_;
};

struct PGanResult {
  models::PGanModel model;
  LossCurve curve;
  std::vector<std::string> notes;
};

PGanResult pgan_train(const data::Dataset& ds, const TrainingConfig& cfg, const TrainObserver& observer = {});

/// Feature-space copy of `ds` with generator samples appended per class up
/// to `target_counts`. Appended rows are flagged synthetic.
data::Dataset rebalance_dataset(const data::Dataset& ds, const models::PGanModel& model,
                                const std::vector<std::size_t>& target_counts, std::uint64_t seed);
/// Raises every class to the majority count.
data::Dataset rebalance_dataset(const data::Dataset& ds, const models::PGanModel& model, std::uint64_t seed);

enum class EvalMode { adversarial_c, retrained_c };

std::string_view to_string(EvalMode m);

/// adversarial_c: the trained F and C. retrained_c: the trained F with a
/// fresh C fitted on the equalised feature-space dataset.
Classifier pgan_classifier(const data::Dataset& train, const models::PGanModel& model, EvalMode mode,
                           const TrainingConfig& cfg);

}  // namespace pgan::training
