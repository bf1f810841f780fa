#include "pgan/models/generator.hpp"

#include <algorithm>
#include <numeric>

#include "pgan/common/error.hpp"

namespace pgan::models {
namespace {

const nn::Tensor& class_anchors(const GeneratorParams& g, int k) {
  if (k < 0 || static_cast<std::size_t>(k) >= g.bank.num_classes()) {
    throw DomainError("generator: class " + std::to_string(k) + " is out of range");
  }
  const auto& anchors = g.bank.anchors[static_cast<std::size_t>(k)];
  if (g.bank.size(k) == 0 || anchors.empty()) {
    throw DomainError("generator: class " + std::to_string(k) + " has an empty bank");
  }
  return anchors;
}

}  // namespace

std::size_t ClassBank::slots() const {
  std::size_t s = 0;
  for (const auto& r : rows) s = std::max(s, r.size());
  return s;
}

std::size_t ClassBank::dim() const {
  for (const auto& a : anchors) {
    if (a.rank() == 2 && a.rows() > 0) return a.cols();
  }
  return 0;
}

void ClassBank::refresh(const nn::Tensor& features) {
  anchors.resize(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t r : rows[k]) {
      if (r >= features.rows()) {
        throw DimensionError("bank row " + std::to_string(r) + " outside a feature set of " +
                             std::to_string(features.rows()) + " rows");
      }
    }
    anchors[k] = rows[k].empty() ? nn::Tensor::matrix(0, features.cols()) : features.gather_rows(rows[k]);
  }
}

ClassBank draw_bank(std::span<const int> labels, std::size_t num_classes, std::size_t bank_size, Rng& rng) {
  if (bank_size == 0) throw DomainError("draw_bank: bank size must be positive");
  ClassBank bank;
  bank.rows.resize(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw DomainError("draw_bank: label " + std::to_string(labels[i]) + " out of range");
    }
    bank.rows[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (auto& rows : bank.rows) {
    rng.shuffle(rows.begin(), rows.end());
    if (rows.size() > bank_size) rows.resize(bank_size);
  }
  return bank;
}

void GeneratorParams::validate() const {
  q_net.validate();
  p_head.validate();
  if (q_net.empty() || p_head.empty()) throw ConsistencyError("generator: Q and P must both have layers");
  if (q_net.input_size() != latent_dim + num_classes) {
    throw ConsistencyError("generator: Q expects " + std::to_string(q_net.input_size()) + " inputs, not latent " +
                           std::to_string(latent_dim) + " + classes " + std::to_string(num_classes));
  }
  if (q_net.output_size() != p_head.input_size()) throw ConsistencyError("generator: Q and P do not chain");
  if (p_head.output_activation() != nn::Activation::softmax) {
    throw ConsistencyError("generator: P must end in softmax");
  }
  if (p_head.output_size() != bank.slots()) {
    throw ConsistencyError("generator: P has " + std::to_string(p_head.output_size()) + " outputs for " +
                           std::to_string(bank.slots()) + " bank slots");
  }
  if (bank.num_classes() != num_classes) throw ConsistencyError("generator: bank class count mismatch");
}

GeneratorParams make_generator(std::size_t latent_dim, std::size_t num_classes, std::size_t hidden,
                               ClassBank bank, Rng& rng) {
  GeneratorParams g;
  g.latent_dim = latent_dim;
  g.num_classes = num_classes;
  g.q_net = nn::Network::build(latent_dim + num_classes,
                               {{hidden, nn::Activation::relu}, {hidden, nn::Activation::relu}}, rng);
  g.p_head = nn::Network::build(hidden, {{bank.slots(), nn::Activation::softmax}}, rng);
  g.bank = std::move(bank);
  g.validate();
  return g;
}

nn::Tensor mix_anchors(const nn::Tensor& anchors, std::span<const double> weights) {
  if (anchors.rank() != 2 || anchors.rows() != weights.size()) {
    throw DimensionError("mix_anchors: " + std::to_string(weights.size()) + " weights for anchors " +
                         anchors.shape_string());
  }
  nn::Tensor out = nn::Tensor::vector(anchors.cols());
  for (std::size_t j = 0; j < anchors.rows(); ++j) {
    const auto row = anchors.row(j);
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += weights[j] * row[c];
  }
  return out;
}

GeneratorSample generator_forward(const GeneratorParams& g, std::span<const double> z, int k) {
  if (z.size() != g.latent_dim) {
    throw DimensionError("generator_forward: z has " + std::to_string(z.size()) + " entries, expected " +
                         std::to_string(g.latent_dim));
  }
  const auto& anchors = class_anchors(g, k);
  nn::Tensor zt = nn::Tensor::matrix(1, z.size());
  std::copy(z.begin(), z.end(), zt.values().begin());
  const int label[1] = {k};
  const auto pass = generate(g, zt, label);

  GeneratorSample out;
  out.weights = nn::Tensor::vector(anchors.rows());
  const auto slot_weights = pass.p.output().row(0);
  for (std::size_t j = 0; j < slot_weights.size(); ++j) out.weights[j % anchors.rows()] += slot_weights[j];
  out.sample = mix_anchors(anchors, out.weights.values());
  return out;
}

GeneratorPass generate(const GeneratorParams& g, const nn::Tensor& z, std::span<const int> labels) {
  if (z.rank() != 2 || z.cols() != g.latent_dim || z.rows() != labels.size()) {
    throw DimensionError("generate: z " + z.shape_string() + " for " + std::to_string(labels.size()) +
                         " labels and latent size " + std::to_string(g.latent_dim));
  }
  GeneratorPass pass;
  pass.labels.assign(labels.begin(), labels.end());
  pass.q = nn::forward(g.q_net, nn::hconcat(z, nn::one_hot(labels, g.num_classes)));
  pass.p = nn::forward(g.p_head, pass.q.output());

  const std::size_t d = g.bank.dim();
  pass.samples = nn::Tensor::matrix(labels.size(), d);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto& anchors = class_anchors(g, labels[r]);
    const std::size_t bk = anchors.rows();
    const auto w = pass.p.output().row(r);
    auto out = pass.samples.row(r);
    for (std::size_t j = 0; j < w.size(); ++j) {
      const auto a = anchors.row(j % bk);
      for (std::size_t c = 0; c < d; ++c) out[c] += w[j] * a[c];
    }
  }
  return pass;
}

GeneratorGrads generator_backward(const GeneratorParams& g, const GeneratorPass& pass,
                                  const nn::Tensor& sample_grad) {
  if (!sample_grad.same_shape(pass.samples)) {
    throw ConsistencyError("generator_backward: gradient " + sample_grad.shape_string() + " vs samples " +
                           pass.samples.shape_string());
  }
  const std::size_t slots = g.p_head.output_size();
  nn::Tensor weight_grad = nn::Tensor::matrix(pass.labels.size(), slots);
  for (std::size_t r = 0; r < pass.labels.size(); ++r) {
    const auto& anchors = class_anchors(g, pass.labels[r]);
    const auto gs = sample_grad.row(r);
    auto out = weight_grad.row(r);
    for (std::size_t j = 0; j < slots; ++j) {
      const auto a = anchors.row(j % anchors.rows());
      out[j] = std::inner_product(a.begin(), a.end(), gs.begin(), 0.0);
    }
  }
  auto p_back = nn::backward(g.p_head, pass.p, weight_grad);
  auto q_back = nn::backward(g.q_net, pass.q, p_back.input);
  return {std::move(q_back.params), std::move(p_back.params)};
}

}  // namespace pgan::models
