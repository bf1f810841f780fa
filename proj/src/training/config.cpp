#include "pgan/training/config.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "pgan/common/error.hpp"

namespace pgan::training {

std::string_view to_string(LabelFallback f) {
  return f == LabelFallback::uniform_all ? "uniform_all" : "uniform_minority";
}

std::string_view to_string(Lipschitz l) {
  return l == Lipschitz::gradient_penalty ? "gradient_penalty" : "weight_clipping";
}

void TrainingConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("training config: " + msg); };
  if (j_steps < 1) fail("j_steps must be at least 1");
  if (batch_size < 2) fail("batch_size must be at least 2");
  if (latent_dim == 0) fail("latent_dim must be positive");
  if (hidden == 0) fail("hidden must be positive");
  if (bank_size == 0) fail("bank_size must be positive");
  if (!(lr > 0.0) || !(ae_lr > 0.0)) fail("learning rates must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("betas must lie in [0, 1)");
  if (gp_lambda < 0.0 || lambda_C < 0.0 || lambda_D < 0.0) fail("lambda weights must be non-negative");
  if (!(clip_value > 0.0)) fail("clip_value must be positive");
  if (jitter < 0.0) fail("jitter must be non-negative");
  for (auto w : feature_widths) {
    if (w == 0) fail("feature widths must be positive");
  }
}

void LossCurve::append(const LossRecord& r) {
  if (!records_.empty() && r.iteration <= records_.back().iteration) {
    throw ConsistencyError("loss curve iteration " + std::to_string(r.iteration) + " does not follow " +
                           std::to_string(records_.back().iteration));
  }
  records_.push_back(r);
}

void LossCurve::write_csv(std::ostream& out, bool timestamps) const {
  out << "iteration,loss_G,loss_D,loss_C,wall_ms\n";
  char buf[64];
  auto field = [&](double v) {
    if (std::isnan(v)) return std::string();
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : records_) {
    out << r.iteration << ',' << field(r.loss_G) << ',' << field(r.loss_D) << ',' << field(r.loss_C) << ','
        << (timestamps ? field(r.wall_ms) : std::string("0")) << '\n';
  }
}

}  // namespace pgan::training
