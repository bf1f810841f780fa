#include "pgan/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "pgan/common/error.hpp"
#include "pgan/common/rng.hpp"

namespace pgan::nn {
namespace {

// Visits every scalar parameter of `net` together with its analytic gradient.
double compare_all(Network& net, const ParamGrads& analytic, const std::function<double()>& objective) {
  double worst = 0.0;
  const double h = kFiniteDifferenceStep;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    auto& layer = net.layers()[l];
    auto probe = [&](Tensor& param, const Tensor& grad) {
      for (std::size_t i = 0; i < param.size(); ++i) {
        const double saved = param[i];
        param[i] = saved + h;
        const double plus = objective();
        param[i] = saved - h;
        const double minus = objective();
        param[i] = saved;
        worst = std::max(worst, relative_error(grad[i], (plus - minus) / (2.0 * h)));
      }
    };
    probe(layer.weight, analytic.layers[l].weight);
    probe(layer.bias, analytic.layers[l].bias);
  }
  return worst;
}

// Built networks start with zero biases, which puts relu units exactly on
// their kink whenever the previous layer is fully inactive.
Network random_network(std::size_t input, const std::vector<LayerSpec>& specs, Rng& rng) {
  Network net = Network::build(input, specs, rng);
  for (auto& layer : net.layers()) {
    for (double& b : layer.bias.values()) b = rng.normal(0.0, 0.5);
  }
  return net;
}

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

double grad_check(const Network& net_in, const Tensor& batch, LossKind kind, std::uint64_t seed) {
  if (net_in.parameter_count() == 0) return 0.0;
  Network net = net_in;
  Rng rng(seed);
  const std::size_t n = batch.rows();
  const std::size_t m = net.output_size();

  std::function<LossResult(const Tensor&)> loss;
  Tensor targets;
  std::vector<int> labels;
  if (kind == LossKind::mean_squared) {
    targets = random_matrix(n, m, rng);
    loss = [&](const Tensor& out) { return mean_squared_error(out, targets); };
  } else {
    if (net.output_activation() != Activation::softmax) {
      throw ConsistencyError("grad_check: cross-entropy needs a softmax output layer");
    }
    for (std::size_t i = 0; i < n; ++i) labels.push_back(static_cast<int>(rng.index(m)));
    loss = [&](const Tensor& out) { return cross_entropy(out, labels); };
  }

  const auto acts = forward(net, batch);
  const auto analytic = backward(net, acts, loss(acts.output()).grad).params;
  return compare_all(net, analytic, [&] { return loss(predict(net, batch)).value; });
}

double grad_check_input_gradient(const Network& net_in, const Tensor& batch, std::uint64_t seed) {
  if (net_in.parameter_count() == 0) return 0.0;
  Network net = net_in;
  Rng rng(seed);
  const Tensor weighting = random_matrix(batch.rows(), batch.cols(), rng);
  auto objective = [&] {
    const Tensor g = input_gradient(net, forward(net, batch));
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += weighting[i] * g[i];
    return s;
  };
  const auto analytic = input_gradient_backward(net, forward(net, batch), weighting);
  return compare_all(net, analytic, objective);
}

std::vector<GradcheckCase> run_gradcheck_suite(std::size_t seeds, double tolerance) {
  constexpr std::size_t kInput = 3, kHidden = 5, kOutput = 4, kBatch = 4;
  const Activation hidden_kinds[] = {Activation::linear, Activation::relu, Activation::tanh,
                                     Activation::sigmoid};
  struct Head {
    Activation activation;
    LossKind loss;
  };
  const Head heads[] = {{Activation::linear, LossKind::mean_squared},
                        {Activation::sigmoid, LossKind::mean_squared},
                        {Activation::tanh, LossKind::mean_squared},
                        {Activation::softmax, LossKind::mean_squared},
                        {Activation::softmax, LossKind::cross_entropy}};

  std::vector<GradcheckCase> cases;
  for (Activation hidden : hidden_kinds) {
    for (const Head& head : heads) {
      GradcheckCase c{std::string(to_string(hidden)) + "+" + std::string(to_string(head.activation)) +
                      "/" + std::string(to_string(head.loss))};
      for (std::size_t s = 0; s < seeds; ++s) {
        Rng rng(mix_seed(s, 1));
        const Network net = random_network(
            kInput, {{kHidden, hidden}, {kHidden, hidden}, {kOutput, head.activation}}, rng);
        const Tensor batch = random_matrix(kBatch, kInput, rng);
        c.max_relative_error = std::max(c.max_relative_error, grad_check(net, batch, head.loss, s));
      }
      c.passed = c.max_relative_error < tolerance;
      cases.push_back(c);
    }
    GradcheckCase c{std::string(to_string(hidden)) + "+linear/input-gradient"};
    for (std::size_t s = 0; s < seeds; ++s) {
      Rng rng(mix_seed(s, 2));
      const Network net =
          random_network(kInput, {{kHidden, hidden}, {kHidden, hidden}, {1, Activation::linear}}, rng);
      const Tensor batch = random_matrix(kBatch, kInput, rng);
      c.max_relative_error = std::max(c.max_relative_error, grad_check_input_gradient(net, batch, s));
    }
    c.passed = c.max_relative_error < tolerance;
    cases.push_back(c);
  }
  return cases;
}

}  // namespace pgan::nn
