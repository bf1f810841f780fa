#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "pgan/common/error.hpp"
#include "pgan/data/sampling.hpp"
#include "pgan/data/synthetic.hpp"
#include "pgan/metrics/metrics.hpp"
#include "pgan/models/hull.hpp"
#include "pgan/models/networks.hpp"
#include "pgan/nn/serialize.hpp"
#include "pgan/training/baselines.hpp"
#include "pgan/training/objectives.hpp"
#include "pgan/training/pgan.hpp"

using namespace pgan;
using namespace pgan::training;
using nn::Tensor;

namespace {

data::ClassPriors priors_of(std::vector<double> p) {
  data::ClassPriors out;
  out.priors = p;
  for (std::size_t i = 0; i < p.size(); ++i) out.ascending_order.push_back(static_cast<int>(i));
  std::stable_sort(out.ascending_order.begin(), out.ascending_order.end(),
                   [&](int a, int b) { return p[static_cast<std::size_t>(a)] < p[static_cast<std::size_t>(b)]; });
  return out;
}

// D(x) = w . x + b, scalar output.
nn::Network linear_critic(std::vector<double> w, double b = 0.0) {
  nn::DenseLayer layer;
  layer.weight = Tensor::from_rows({w}, w.size());
  layer.bias = Tensor(Tensor::Shape{1}, std::vector<double>{b});
  return nn::Network({layer});
}

std::vector<double> frequencies(const std::vector<int>& labels, std::size_t k) {
  std::vector<double> f(k, 0.0);
  for (int y : labels) f[static_cast<std::size_t>(y)] += 1.0 / static_cast<double>(labels.size());
  return f;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

data::Dataset small_blobs(std::uint64_t seed = 3) {
  return data::make_blobs({120, 30, 12}, {{0, 0}, {3, 0}, {1.5, 2.6}}, 0.8, seed);
}

TrainingConfig quick_config(std::uint64_t seed = 1) {
  TrainingConfig cfg;
  cfg.epochs = 3;
  cfg.j_steps = 2;
  cfg.batch_size = 32;
  cfg.hidden = 16;
  cfg.latent_dim = 4;
  cfg.ae_epochs = 3;
  cfg.classifier_epochs = 5;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  TrainingConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.j_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.batch_size = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.lambda_C = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.jitter = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("label weights") {
  const auto p = priors_of({0.2, 0.3, 0.5});
  const auto gap = label_weights(p, LabelMode::prior_gap);
  CHECK(gap.weights[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(gap.weights[1] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(gap.weights[2] == 0.0);
  CHECK_FALSE(gap.fallback_used);

  const auto four = label_weights(priors_of({0.1, 0.2, 0.3, 0.4}), LabelMode::uniform_minority);
  for (int i = 0; i < 3; ++i) CHECK(four.weights[static_cast<std::size_t>(i)] == doctest::Approx(1.0 / 3.0));
  CHECK(four.weights[3] == 0.0);

  SUBCASE("equal priors use the fallback") {
    const auto eq = priors_of({0.25, 0.25, 0.25, 0.25});
    const auto all = label_weights(eq, LabelMode::prior_gap, LabelFallback::uniform_all);
    CHECK(all.fallback_used);
    for (double w : all.weights) CHECK(w == doctest::Approx(0.25));
    const auto minority = label_weights(eq, LabelMode::prior_gap, LabelFallback::uniform_minority);
    CHECK(minority.fallback_used);
    CHECK(minority.weights[static_cast<std::size_t>(eq.majority())] == 0.0);
    const auto draw = sample_minority_labels(eq, 10, LabelMode::prior_gap, 4, LabelFallback::uniform_all);
    CHECK(draw.fallback_used);
  }
  CHECK_THROWS_AS(label_weights(priors_of({1.0}), LabelMode::prior_gap), DomainError);
}

TEST_CASE("label sampler frequencies") {
  const auto p = priors_of({0.2, 0.3, 0.5});
  const auto gap = sample_minority_labels(p, 100000, LabelMode::prior_gap, 11);
  const auto fg = frequencies(gap.labels, 3);
  CHECK(total_variation(fg, {0.6, 0.4, 0.0}) < 0.01);
  CHECK(fg[2] == 0.0);
  const auto uni = sample_minority_labels(p, 100000, LabelMode::uniform_minority, 12);
  const auto fu = frequencies(uni.labels, 3);
  CHECK(total_variation(fu, {0.5, 0.5, 0.0}) < 0.01);
  CHECK(sample_minority_labels(p, 50, LabelMode::prior_gap, 9).labels ==
        sample_minority_labels(p, 50, LabelMode::prior_gap, 9).labels);
  CHECK_THROWS_AS(sample_minority_labels(p, 0, LabelMode::prior_gap, 1), DomainError);
}

TEST_CASE("critic objective") {
  const auto p = priors_of({0.2, 0.3, 0.5});
  // Constant critic with score 1 on real, 0 on fake: two networks.
  const auto one = linear_critic({0.0, 0.0}, 1.0);
  const auto zero = linear_critic({0.0, 0.0}, 0.0);
  const Tensor x = Tensor::from_rows({{0.1, 0.2}, {0.3, 0.4}});
  const std::vector<int> cls0{0, 0};

  const auto real_only = critic_objective(one, x, cls0, Tensor::matrix(0, 2), {}, p);
  CHECK(real_only.value == doctest::Approx(0.2).epsilon(1e-12));
  const auto fake_zero = critic_objective(zero, x, cls0, x, cls0, p);
  CHECK(fake_zero.value == doctest::Approx(0.0));

  SUBCASE("identical batches") {
    const auto q = priors_of({0.25, 0.75});
    const auto d = linear_critic({1.0, -2.0}, 0.5);
    const auto obj = critic_objective(d, x, cls0, x, cls0, q);
    const double mean = ((0.1 - 0.4 + 0.5) + (0.3 - 0.8 + 0.5)) / 2.0;
    CHECK(obj.value == doctest::Approx(-0.25 * mean).epsilon(1e-12));
  }
  SUBCASE("gradient matches finite differences") {
    Rng rng(5);
    auto d = models::make_critic(2, 4, rng);
    const std::vector<int> yr{0, 1}, yf{1, 0};
    const auto obj = critic_objective(d, x, yr, x, yf, p);
    auto& w = d.layers()[0].weight;
    const double h = 1e-6;
    const double orig = w[1];
    w[1] = orig + h;
    const double up = critic_objective(d, x, yr, x, yf, p).value;
    w[1] = orig - h;
    const double down = critic_objective(d, x, yr, x, yf, p).value;
    w[1] = orig;
    CHECK(obj.grads.layers[0].weight[1] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-5));
  }
  CHECK_THROWS_AS(critic_objective(one, x, std::vector<int>{0, 3}, Tensor::matrix(0, 2), {}, p), DomainError);
}

TEST_CASE("gradient penalty closed form") {
  Rng rng(2);
  Tensor real = Tensor::matrix(16, 3), fake = Tensor::matrix(16, 3);
  for (double& v : real.values()) v = rng.normal(0.0, 1.0);
  for (double& v : fake.values()) v = rng.normal(2.0, 1.0);

  CHECK(gradient_penalty(linear_critic({0.6, 0.8, 0.0}), real, fake, 1).value == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(gradient_penalty(linear_critic({1.2, 1.6, 0.0}), real, fake, 1).value ==
        doctest::Approx(1.0).epsilon(1e-8));
  CHECK(gradient_penalty(linear_critic({0.0, 0.0, 0.0}, 3.0), real, fake, 1).value ==
        doctest::Approx(1.0).epsilon(1e-8));
  for (int s = 0; s < 10; ++s) {
    std::vector<double> w{rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1)};
    const double norm = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
    const auto pen = gradient_penalty(linear_critic(w), real, fake, static_cast<std::uint64_t>(s));
    CHECK(std::abs(pen.value - (norm - 1) * (norm - 1)) < 1e-8);
  }
  SUBCASE("penalised columns") {
    // Only the first two columns count: ||(0.6, 0.8)|| = 1.
    CHECK(gradient_penalty(linear_critic({0.6, 0.8, 5.0}), real, fake, 1, 2).value ==
          doctest::Approx(0.0).epsilon(1e-8));
  }
  SUBCASE("gradient matches finite differences") {
    auto d = models::make_critic(3, 5, rng);
    const auto pen = gradient_penalty(d, real, fake, 7);
    auto& w = d.layers()[1].weight;
    const double h = 1e-6;
    const double orig = w[3];
    w[3] = orig + h;
    const double up = gradient_penalty(d, real, fake, 7).value;
    w[3] = orig - h;
    const double down = gradient_penalty(d, real, fake, 7).value;
    w[3] = orig;
    CHECK(pen.grads.layers[1].weight[3] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-4));
  }
  CHECK_THROWS_AS(gradient_penalty(linear_critic({1, 1, 1}), real, Tensor::matrix(16, 2), 1), DimensionError);
}

TEST_CASE("classifier objective") {
  const auto p = priors_of({0.3, 0.7});
  const Tensor probs = Tensor::from_rows({{0.8, 0.2}});
  const auto [value, clamped] = classifier_objective_value(probs, std::vector<int>{0}, p);
  CHECK(value == doctest::Approx(0.3 * std::log(0.8)).epsilon(1e-12));
  CHECK(value == doctest::Approx(-0.06694).epsilon(1e-4));
  CHECK_FALSE(clamped);

  SUBCASE("clamped log terms stay finite") {
    const auto q = priors_of({0.1, 0.3, 0.6});
    const auto [v, c] = classifier_objective_value(Tensor::from_rows({{0.0, 1.0, 0.0}}), std::vector<int>{0}, q);
    CHECK(std::isfinite(v));
    CHECK(c);
    CHECK(v == doctest::Approx(0.1 * std::log(1e-12) + 0.3 * std::log(1e-12)));
  }
  SUBCASE("equal priors keep only the true-class term") {
    const auto q = priors_of({0.5, 0.5});
    const auto [v, c] = classifier_objective_value(Tensor::from_rows({{0.4, 0.6}}), std::vector<int>{1}, q);
    CHECK(v == doctest::Approx(0.5 * std::log(0.6)));
  }
  SUBCASE("gradient matches finite differences") {
    Rng rng(8);
    const auto pr = priors_of({0.2, 0.3, 0.5});
    auto c = models::make_classifier(2, 3, 6, rng);
    const Tensor x = Tensor::from_rows({{0.3, -1.0}, {1.2, 0.4}, {-0.5, 0.9}});
    const std::vector<int> y{0, 1, 2};
    const auto obj = classifier_objective(c, x, y, pr);
    auto& b = c.layers()[0].bias;
    const double h = 1e-6;
    const double orig = b[2];
    b[2] = orig + h;
    const double up = classifier_objective(c, x, y, pr).value;
    b[2] = orig - h;
    const double down = classifier_objective(c, x, y, pr).value;
    b[2] = orig;
    CHECK(obj.grads.layers[0].bias[2] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-5));
  }
  CHECK_THROWS_AS(classifier_objective_value(probs, std::vector<int>{2}, p), DomainError);
  CHECK_THROWS_AS(classifier_objective_value(probs, std::vector<int>{0, 1}, p), DimensionError);
}

TEST_CASE("loss curve") {
  LossCurve curve;
  curve.append({1, 0.5, std::nan(""), 0.25, 12.5});
  curve.append({3, 1.0 / 3.0, 2.0, -1.0, 20.0});
  CHECK_THROWS_AS(curve.append({3, 0, 0, 0, 0}), ConsistencyError);
  std::ostringstream a, b;
  curve.write_csv(a, false);
  CHECK(a.str() == "iteration,loss_G,loss_D,loss_C,wall_ms\n1,0.5,,0.25,0\n3,0.33333333333333331,2,-1,0\n");
  curve.write_csv(b, true);
  CHECK(b.str().find("1,0.5,,0.25,12.5\n") != std::string::npos);
}

TEST_CASE("update directions on frozen batches") {
  const auto ds = small_blobs();
  auto cfg = quick_config();
  cfg.lr = 1e-6;
  cfg.lambda_D = 0.0;
  PGanTrainer t(ds, cfg);
  std::vector<std::size_t> rows(40);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i * 4;
  const Tensor raw = ds.features.gather_rows(rows);
  std::vector<int> labels;
  for (auto r : rows) labels.push_back(ds.labels[r]);

  SUBCASE("generator lowers S_C") {
    const std::vector<int> y{1, 2, 1, 2, 2, 1, 1, 2};
    const Tensor z = t.model().conditioner.sample(y, cfg.latent_dim, t.rng());
    const double before = t.generator_loss(z, y);
    CHECK(t.generator_step(z, y) == doctest::Approx(before));
    CHECK(t.generator_loss(z, y) < before);
  }
  SUBCASE("classifier raises S_C") {
    const Tensor feats = t.features(raw);
    const double before = classifier_objective(t.model().c_net, feats, labels, t.model().priors).value;
    t.classifier_step(feats, labels);
    CHECK(classifier_objective(t.model().c_net, feats, labels, t.model().priors).value > before);
  }
  SUBCASE("critic raises S_D") {
    const Tensor feats = t.features(raw);
    const auto in = models::conditional_input(feats, labels, 3);
    const auto none = Tensor::matrix(0, in.cols());
    const double before = critic_objective(t.model().d_net, in, labels, none, {}, t.model().priors).value;
    t.critic_step(feats, labels, Tensor::matrix(0, feats.cols()), {});
    CHECK(critic_objective(t.model().d_net, in, labels, none, {}, t.model().priors).value > before);
  }
  SUBCASE("feature extractor lowers cross-entropy") {
    auto fcfg = cfg;
    fcfg.feature_widths = {6, 4};
    PGanTrainer tf(ds, fcfg);
    const double before = tf.feature_loss(raw, labels);
    tf.feature_step(raw, labels);
    CHECK(tf.feature_loss(raw, labels) < before);
  }
}

TEST_CASE("training keeps samples in the hull") {
  const auto ds = small_blobs();
  auto cfg = quick_config(4);
  cfg.feature_widths = {5, 3};
  cfg.feature_warmup_epochs = 2;
  std::size_t probes = 0, outside = 0;
  Rng probe_rng(17);
  auto probe = [&](const models::PGanModel& m) {
    std::vector<int> y(256);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 3);
    const Tensor s = models::sample_generator(m, y, probe_rng);
    for (std::size_t r = 0; r < s.rows(); ++r) {
      const auto& anchors = m.g.bank.anchors[static_cast<std::size_t>(y[r])];
      if (!models::hull_membership(s.row(r), anchors).inside) ++outside;
    }
    ++probes;
  };
  TrainObserver obs;
  obs.on_start = probe;
  obs.on_iteration = [&](std::size_t, const models::PGanModel& m) { probe(m); };
  const auto res = pgan_train(ds, cfg, obs);
  CHECK(probes == res.curve.size() + 1);
  CHECK(outside == 0);

  const auto& recs = res.curve.records();
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(recs[i].iteration == i + 1);
    CHECK(std::isfinite(recs[i].loss_G));
    CHECK(std::isfinite(recs[i].loss_D));
    CHECK(std::isfinite(recs[i].loss_C));
  }
}

TEST_CASE("training is deterministic") {
  const auto ds = small_blobs();
  const auto cfg = quick_config(6);
  const auto a = nn::encode(models::to_blob(pgan_train(ds, cfg).model));
  const auto b = nn::encode(models::to_blob(pgan_train(ds, cfg).model));
  CHECK(a == b);
  auto other = cfg;
  other.seed = 7;
  CHECK(a != nn::encode(models::to_blob(pgan_train(ds, other).model)));
}

TEST_CASE("pgan_train preconditions") {
  auto ds = data::make_blobs({10, 1}, {{0, 0}, {3, 0}}, 1.0, 1);
  CHECK_THROWS_AS(pgan_train(ds, quick_config()), DomainError);
  auto bad = quick_config();
  bad.batch_size = 0;
  CHECK_THROWS_AS(pgan_train(small_blobs(), bad), ConfigError);
}

TEST_CASE("rebalance through the generator") {
  const auto ds = small_blobs();
  auto cfg = quick_config(2);
  cfg.feature_widths = {4};
  const auto res = pgan_train(ds, cfg);
  const auto out = rebalance_dataset(ds, res.model, 5);
  CHECK(out.class_counts() == std::vector<std::size_t>{120, 120, 120});
  CHECK(out.feature_space == data::FeatureSpace::extracted);
  CHECK(out.dim() == 4);
  const Tensor original = models::extract_features(res.model.f_net, ds.features);
  for (std::size_t r = 0; r < out.size(); ++r) {
    const bool synthetic = r >= ds.size();
    CHECK(out.is_synthetic(r) == synthetic);
    if (!synthetic) continue;
    const auto& anchors = res.model.g.bank.anchors[static_cast<std::size_t>(out.labels[r])];
    CHECK(models::hull_membership(out.features.row(r), anchors).inside);
  }
  for (std::size_t r = 0; r < ds.size(); ++r) CHECK(out.features.row(r)[0] == original.row(r)[0]);
  CHECK(rebalance_dataset(ds, res.model, {120, 40, 30}, 1).class_counts() == std::vector<std::size_t>{120, 40, 30});
  CHECK_THROWS_AS(rebalance_dataset(ds, res.model, {100, 40, 30}, 1), DomainError);
  CHECK_THROWS_AS(rebalance_dataset(ds, res.model, {120, 40}, 1), DimensionError);
}

TEST_CASE("eval modes") {
  const auto ds = small_blobs();
  const auto cfg = quick_config(3);
  const auto res = pgan_train(ds, cfg);
  CHECK(to_string(EvalMode::adversarial_c) == "adversarial-c");
  CHECK(to_string(EvalMode::retrained_c) == "retrained-c");
  const auto adv = pgan_classifier(ds, res.model, EvalMode::adversarial_c, cfg);
  CHECK(adv.c_net == res.model.c_net);
  const auto re = pgan_classifier(ds, res.model, EvalMode::retrained_c, cfg);
  CHECK_FALSE(re.c_net == res.model.c_net);
  const auto probs = re.probabilities(ds.features);
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    double s = 0;
    for (double v : probs.row(r)) s += v;
    CHECK(s == doctest::Approx(1.0));
  }
}

TEST_CASE("plain classifier") {
  const auto ds = data::make_blobs({150, 150}, {{-3, 0}, {3, 0}}, 0.7, 8);
  TrainingConfig cfg;
  cfg.classifier_epochs = 30;
  cfg.hidden = 16;
  cfg.feature_widths = {8};
  cfg.lr = 2e-3;
  const auto fit = train_plain_classifier(ds, cfg);
  const auto test = data::make_blobs({200, 200}, {{-3, 0}, {3, 0}}, 0.7, 9);
  CHECK(metrics::f1_report(fit.classifier.predict(test.features), test.labels, 2).macro_f1 >= 0.95);

  // Epoch averages never increase.
  const auto& recs = fit.curve.records();
  const std::size_t per_epoch = recs.size() / cfg.classifier_epochs;
  REQUIRE(per_epoch * cfg.classifier_epochs == recs.size());
  double prev = INFINITY;
  for (std::size_t e = 0; e < cfg.classifier_epochs; ++e) {
    double avg = 0;
    for (std::size_t i = 0; i < per_epoch; ++i) avg += recs[e * per_epoch + i].loss_C / per_epoch;
    CHECK(avg <= prev + 1e-12);
    prev = avg;
  }
  CHECK(std::isnan(recs[0].loss_G));
  CHECK(train_plain_classifier(ds, cfg).classifier.c_net == fit.classifier.c_net);
}

TEST_CASE("vanilla GAN favours the majority") {
  const auto ds = data::make_blobs({950, 50}, {{3, 3}, {9, 3}}, 1.0, 4);
  TrainingConfig cfg;
  cfg.epochs = 30;
  cfg.seed = 4;
  const auto gan = train_vanilla_gan(ds, cfg);
  CHECK(gan.num_classes == 0);
  CHECK(gan.d_net.output_activation() == nn::Activation::sigmoid);
  Rng rng(1);
  const Tensor s = sample_gan(gan, 10000, rng);
  std::size_t near_major = 0, on_major = 0;
  for (std::size_t r = 0; r < s.rows(); ++r) {
    const double a = std::hypot(s(r, 0) - 3, s(r, 1) - 3), b = std::hypot(s(r, 0) - 9, s(r, 1) - 3);
    if (a < b) ++near_major;
    if (a < 3) ++on_major;
  }
  CHECK(near_major >= 8000);
  // Samples sit on the data, not merely near the origin.
  CHECK(on_major >= 5000);
  CHECK(train_vanilla_gan(ds, cfg).g_net == gan.g_net);
  CHECK_THROWS_AS(sample_gan(gan, std::vector<int>{0}, rng), DomainError);
}

TEST_CASE("conditional GAN") {
  const auto ds = data::make_blobs({300, 300}, {{0, 0}, {6, 0}}, 1.0, 5);
  TrainingConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 5;
  const auto gan = train_cgan(ds, cfg);
  CHECK(gan.num_classes == 2);
  CHECK(gan.d_net.input_size() == ds.dim() + 2);
  CHECK(gan.d_net.output_activation() == nn::Activation::sigmoid);
  Rng rng(3);
  const std::vector<int> zeros(2000, 0), ones(2000, 1);
  const Tensor a = sample_gan(gan, zeros, rng), b = sample_gan(gan, ones, rng);
  double ax = 0, ay = 0, bx = 0, by = 0;
  for (std::size_t r = 0; r < 2000; ++r) {
    ax += a(r, 0) / 2000;
    ay += a(r, 1) / 2000;
    bx += b(r, 0) / 2000;
    by += b(r, 1) / 2000;
  }
  CHECK(std::hypot(ax - bx, ay - by) > 0.0);
  CHECK(bx - ax > 3.0);
  CHECK(train_cgan(ds, cfg).g_net == gan.g_net);
  CHECK_THROWS_AS(sample_gan(gan, 5, rng), DomainError);

  const auto small = data::make_blobs({200, 60}, {{0, 0}, {6, 0}}, 1.0, 5);
  auto short_cfg = cfg;
  short_cfg.epochs = 5;
  const auto balanced = rebalance_with_gan(small, train_cgan(small, short_cfg), {200, 200}, 2);
  CHECK(balanced.class_counts() == std::vector<std::size_t>{200, 200});
  CHECK(balanced.feature_space == data::FeatureSpace::raw);
  CHECK(balanced.is_synthetic(399));
  CHECK_FALSE(balanced.is_synthetic(0));
  CHECK_THROWS_AS(rebalance_with_gan(small, gan, {100, 200}, 2), DomainError);
}
