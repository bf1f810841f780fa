#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace pgan::training {

enum class LabelFallback { uniform_all, uniform_minority };
enum class Lipschitz { gradient_penalty, weight_clipping };

std::string_view to_string(LabelFallback f);
std::string_view to_string(Lipschitz l);

struct TrainingConfig {
  /// Passes over the training set; one outer iteration per minibatch.
  std::size_t epochs = 30;
  /// Inner classifier/critic/generator rounds per outer iteration.
  std::size_t j_steps = 3;
  std::size_t batch_size = 64;
  std::size_t latent_dim = 8;
  /// Hidden width of C, D, Q and the autoencoder.
  std::size_t hidden = 32;
  /// Relu widths of the feature extractor; empty means identity features.
  std::vector<std::size_t> feature_widths;
  double lr = 2e-4;
  double beta1 = 0.6;
  double beta2 = 0.999;
  Lipschitz lipschitz = Lipschitz::gradient_penalty;
  double gp_lambda = 10.0;
  double clip_value = 0.01;
  double lambda_C = 1.0;
  double lambda_D = 1.0;
  std::size_t bank_size = 64;
  std::uint64_t seed = 0;
  LabelFallback label_sampling_fallback = LabelFallback::uniform_all;
  /// Joint F + C cross-entropy epochs run before the adversarial loop.
  std::size_t feature_warmup_epochs = 0;
  std::size_t ae_epochs = 20;
  double ae_lr = 1e-3;
  /// Epochs for plain and retrained classifiers.
  std::size_t classifier_epochs = 60;
  /// Gaussian jitter added to real training batches; 0 disables it.
  double jitter = 0.0;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
};

/// Loss values per outer iteration. Absent series are stored as NaN and
/// written as empty CSV fields.
struct LossRecord {
  std::size_t iteration = 0;
  double loss_G = 0.0;
  double loss_D = 0.0;
  double loss_C = 0.0;
  double wall_ms = 0.0;
};

class LossCurve {
 public:
  /// Throws ConsistencyError unless iterations strictly increase.
  void append(const LossRecord& r);
  const std::vector<LossRecord>& records() const noexcept { return records_; }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t size() const noexcept { return records_.size(); }

  /// Header `iteration,loss_G,loss_D,loss_C,wall_ms`. Without timestamps
  /// wall_ms is written as 0.
  void write_csv(std::ostream& out, bool timestamps = true) const;

 private:
  std::vector<LossRecord> records_;
};

}  // namespace pgan::training
