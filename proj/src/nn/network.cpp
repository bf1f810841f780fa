#include "pgan/nn/network.hpp"

#include <algorithm>
#include <cmath>

#include "pgan/common/error.hpp"

namespace pgan::nn {
namespace {

std::string layer_name(std::size_t i) { return "layer " + std::to_string(i); }

void apply_activation(Tensor& z, Activation act) {
  auto v = z.values();
  switch (act) {
    case Activation::linear:
      break;
    case Activation::relu:
      for (double& x : v) x = x > 0.0 ? x : 0.0;
      break;
    case Activation::tanh:
      for (double& x : v) x = std::tanh(x);
      break;
    case Activation::sigmoid:
      for (double& x : v) x = 1.0 / (1.0 + std::exp(-x));
      break;
    case Activation::softmax:
      for (std::size_t r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double& x : row) {
          x = std::exp(x - mx);
          sum += x;
        }
        for (double& x : row) x /= sum;
      }
      break;
  }
}

// d activation / d pre-activation, expressed through the post-activation value.
double first_derivative(Activation act, double a) {
  switch (act) {
    case Activation::linear:
      return 1.0;
    case Activation::relu:
      return a > 0.0 ? 1.0 : 0.0;
    case Activation::tanh:
      return 1.0 - a * a;
    case Activation::sigmoid:
      return a * (1.0 - a);
    case Activation::softmax:
      break;
  }
  throw ConsistencyError("elementwise derivative requested for softmax");
}

double second_derivative(Activation act, double a) {
  switch (act) {
    case Activation::linear:
    case Activation::relu:
      return 0.0;
    case Activation::tanh:
      return -2.0 * a * (1.0 - a * a);
    case Activation::sigmoid:
      return a * (1.0 - a) * (1.0 - 2.0 * a);
    case Activation::softmax:
      break;
  }
  throw ConsistencyError("elementwise derivative requested for softmax");
}

// z = x W^T + b
Tensor affine(const Tensor& x, const DenseLayer& layer) {
  const std::size_t n = x.rows();
  const std::size_t in = layer.in();
  const std::size_t out = layer.out();
  Tensor z = Tensor::matrix(n, out);
  const double* w = layer.weight.values().data();
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x.row(r).data();
    double* zr = z.row(r).data();
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = w + o * in;
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < in; ++i) acc += wo[i] * xr[i];
      zr[o] = acc;
    }
  }
  return z;
}

// dL/dz from dL/da for one layer.
Tensor pre_activation_grad(const Tensor& a, const Tensor& da, Activation act) {
  Tensor dz = da;
  if (act == Activation::softmax) {
    for (std::size_t r = 0; r < a.rows(); ++r) {
      const auto ar = a.row(r);
      auto dzr = dz.row(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < ar.size(); ++c) dot += ar[c] * dzr[c];
      for (std::size_t c = 0; c < ar.size(); ++c) dzr[c] = ar[c] * (dzr[c] - dot);
    }
    return dz;
  }
  auto dv = dz.values();
  const auto av = a.values();
  for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= first_derivative(act, av[i]);
  return dz;
}

// Accumulates weight/bias gradients for dz and returns dL/d(prev).
Tensor accumulate_layer(const DenseLayer& layer, const Tensor& prev, const Tensor& dz, LayerGrads& g,
                        bool need_input_grad) {
  const std::size_t n = dz.rows();
  const std::size_t in = layer.in();
  const std::size_t out = layer.out();
  double* gw = g.weight.values().data();
  for (std::size_t r = 0; r < n; ++r) {
    const double* dzr = dz.row(r).data();
    const double* pr = prev.row(r).data();
    for (std::size_t o = 0; o < out; ++o) {
      const double d = dzr[o];
      g.bias[o] += d;
      if (d == 0.0) continue;
      double* gwo = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) gwo[i] += d * pr[i];
    }
  }
  if (!need_input_grad) return {};
  Tensor dprev = Tensor::matrix(n, in);
  const double* w = layer.weight.values().data();
  for (std::size_t r = 0; r < n; ++r) {
    const double* dzr = dz.row(r).data();
    double* dp = dprev.row(r).data();
    for (std::size_t o = 0; o < out; ++o) {
      const double d = dzr[o];
      if (d == 0.0) continue;
      const double* wo = w + o * in;
      for (std::size_t i = 0; i < in; ++i) dp[i] += d * wo[i];
    }
  }
  return dprev;
}

void check_activations(const Network& net, const Activations& acts) {
  if (acts.outputs.size() != net.depth()) {
    throw ConsistencyError("activations hold " + std::to_string(acts.outputs.size()) +
                           " layer outputs but the network has " + std::to_string(net.depth()) +
                           " layers");
  }
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto& o = acts.outputs[l];
    if (o.rank() != 2 || o.cols() != net.layers()[l].out() || o.rows() != acts.input.rows()) {
      throw ConsistencyError(layer_name(l) + ": stored output " + o.shape_string() +
                             " does not match the network");
    }
  }
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::linear:
      return "linear";
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::softmax:
      return "softmax";
  }
  return "?";
}

std::optional<Activation> parse_activation(std::string_view name) {
  for (auto a : {Activation::linear, Activation::relu, Activation::tanh, Activation::sigmoid,
                 Activation::softmax}) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { validate(); }

Network Network::build(std::size_t input_size, const std::vector<LayerSpec>& specs, Rng& rng) {
  std::vector<DenseLayer> layers;
  std::size_t in = input_size;
  for (const auto& spec : specs) {
    DenseLayer layer{Tensor::matrix(spec.out, in), Tensor::vector(spec.out), spec.activation};
    const double limit = std::sqrt(6.0 / static_cast<double>(in + spec.out));
    for (double& w : layer.weight.values()) w = rng.uniform(-limit, limit);
    layers.push_back(std::move(layer));
    in = spec.out;
  }
  return Network(std::move(layers));
}

std::size_t Network::input_size() const {
  if (layers_.empty()) throw ConsistencyError("empty network has no fixed input size");
  return layers_.front().in();
}

std::size_t Network::output_size() const {
  if (layers_.empty()) throw ConsistencyError("empty network has no fixed output size");
  return layers_.back().out();
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Activation Network::output_activation() const {
  return layers_.empty() ? Activation::linear : layers_.back().activation;
}

void Network::validate() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weight.rank() != 2 || l.bias.rank() != 1 || l.bias.size() != l.out()) {
      throw ConsistencyError(layer_name(i) + ": weight " + l.weight.shape_string() + " and bias " +
                             l.bias.shape_string() + " are inconsistent");
    }
    if (i > 0 && layers_[i - 1].out() != l.in()) {
      throw ConsistencyError(layer_name(i) + ": input width " + std::to_string(l.in()) +
                             " does not chain with previous output " +
                             std::to_string(layers_[i - 1].out()));
    }
    if (l.activation == Activation::softmax && i + 1 != layers_.size()) {
      throw ConsistencyError(layer_name(i) + ": softmax is only allowed on the final layer");
    }
  }
}

ParamGrads ParamGrads::zeros_like(const Network& net) {
  ParamGrads g;
  g.layers.reserve(net.depth());
  for (const auto& l : net.layers()) {
    g.layers.push_back({Tensor(l.weight.shape(), 0.0), Tensor(l.bias.shape(), 0.0)});
  }
  return g;
}

void ParamGrads::add_scaled(const ParamGrads& other, double s) {
  if (other.layers.size() != layers.size()) throw ConsistencyError("add_scaled: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& dst = layers[l];
    const auto& src = other.layers[l];
    if (!dst.weight.same_shape(src.weight) || !dst.bias.same_shape(src.bias)) {
      throw ConsistencyError("add_scaled: shape mismatch in " + layer_name(l));
    }
    for (std::size_t i = 0; i < dst.weight.size(); ++i) dst.weight[i] += s * src.weight[i];
    for (std::size_t i = 0; i < dst.bias.size(); ++i) dst.bias[i] += s * src.bias[i];
  }
}

void ParamGrads::scale(double factor) {
  for (auto& l : layers) {
    for (double& v : l.weight.values()) v *= factor;
    for (double& v : l.bias.values()) v *= factor;
  }
}

bool ParamGrads::all_finite() const {
  return std::all_of(layers.begin(), layers.end(),
                     [](const LayerGrads& g) { return g.weight.all_finite() && g.bias.all_finite(); });
}

Activations forward(const Network& net, const Tensor& batch) {
  if (batch.rank() != 2) throw DimensionError("forward: batch must be a matrix, got " + batch.shape_string());
  Activations acts;
  acts.input = batch;
  acts.outputs.reserve(net.depth());
  const Tensor* prev = &acts.input;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto& layer = net.layers()[l];
    if (prev->cols() != layer.in()) {
      throw DimensionError(layer_name(l) + " expects " + std::to_string(layer.in()) +
                           " inputs but received " + std::to_string(prev->cols()));
    }
    Tensor z = affine(*prev, layer);
    apply_activation(z, layer.activation);
    if (!z.all_finite()) throw NonFiniteError(layer_name(l) + " produced a non-finite activation");
    acts.outputs.push_back(std::move(z));
    prev = &acts.outputs.back();
  }
  return acts;
}

Tensor predict(const Network& net, const Tensor& batch) { return forward(net, batch).output(); }

Backward backward(const Network& net, const Activations& acts, const Tensor& output_grad) {
  check_activations(net, acts);
  if (!output_grad.same_shape(acts.output())) {
    throw ConsistencyError("output gradient " + output_grad.shape_string() +
                           " does not match network output " + acts.output().shape_string());
  }
  Backward result{ParamGrads::zeros_like(net), output_grad};
  for (std::size_t k = net.depth(); k-- > 0;) {
    const auto& layer = net.layers()[k];
    const Tensor& prev = k == 0 ? acts.input : acts.outputs[k - 1];
    Tensor dz = pre_activation_grad(acts.outputs[k], result.input, layer.activation);
    result.input = accumulate_layer(layer, prev, dz, result.params.layers[k], true);
  }
  return result;
}

Tensor input_gradient(const Network& net, const Activations& acts) {
  if (net.empty() || net.output_size() != 1) {
    throw ConsistencyError("input_gradient requires a scalar-output network");
  }
  return backward(net, acts, Tensor::matrix(acts.input.rows(), 1, 1.0)).input;
}

ParamGrads input_gradient_backward(const Network& net, const Activations& acts, const Tensor& seed) {
  check_activations(net, acts);
  if (net.empty() || net.output_size() != 1) {
    throw ConsistencyError("input_gradient_backward requires a scalar-output network");
  }
  for (std::size_t l = 0; l < net.depth(); ++l) {
    if (net.layers()[l].activation == Activation::softmax) {
      throw ConsistencyError(layer_name(l) + ": softmax is not supported by double backprop");
    }
  }
  if (!seed.same_shape(acts.input)) {
    throw ConsistencyError("seed " + seed.shape_string() + " does not match input " +
                           acts.input.shape_string());
  }
  const std::size_t depth = net.depth();
  const std::size_t n = acts.input.rows();

  // First pass: the ordinary input-gradient recursion, keeping u_l (grad
  // w.r.t. a_l) and delta_l (grad w.r.t. z_l) for every layer.
  std::vector<Tensor> u(depth), delta(depth);
  u[depth - 1] = Tensor::matrix(n, 1, 1.0);
  for (std::size_t k = depth; k-- > 0;) {
    const auto& layer = net.layers()[k];
    delta[k] = pre_activation_grad(acts.outputs[k], u[k], layer.activation);
    if (k > 0) {
      LayerGrads scratch{Tensor(layer.weight.shape(), 0.0), Tensor(layer.bias.shape(), 0.0)};
      u[k - 1] = accumulate_layer(layer, acts.outputs[k - 1], delta[k], scratch, true);
    }
  }

  // Reverse through the backward recursion, from the input side upwards.
  ParamGrads grads = ParamGrads::zeros_like(net);
  std::vector<Tensor> z_bar(depth);
  Tensor u_bar = seed;  // adjoint of u_{k-1}
  for (std::size_t k = 0; k < depth; ++k) {
    const auto& layer = net.layers()[k];
    const std::size_t in = layer.in();
    const std::size_t out = layer.out();
    const Tensor& a = acts.outputs[k];
    // u_{k-1} = W_k^T delta_k
    Tensor delta_bar = Tensor::matrix(n, out);
    double* gw = grads.layers[k].weight.values().data();
    const double* w = layer.weight.values().data();
    for (std::size_t r = 0; r < n; ++r) {
      const double* ub = u_bar.row(r).data();
      const double* dr = delta[k].row(r).data();
      double* db = delta_bar.row(r).data();
      for (std::size_t o = 0; o < out; ++o) {
        double acc = 0.0;
        const double* wo = w + o * in;
        double* gwo = gw + o * in;
        for (std::size_t i = 0; i < in; ++i) {
          gwo[i] += dr[o] * ub[i];
          acc += wo[i] * ub[i];
        }
        db[o] = acc;
      }
    }
    // delta_k = s'(z_k) * u_k
    Tensor next_u_bar = Tensor::matrix(n, out);
    z_bar[k] = Tensor::matrix(n, out);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t o = 0; o < out; ++o) {
        const double av = a(r, o);
        const double db = delta_bar(r, o);
        next_u_bar(r, o) = first_derivative(layer.activation, av) * db;
        z_bar[k](r, o) = second_derivative(layer.activation, av) * u[k](r, o) * db;
      }
    }
    u_bar = std::move(next_u_bar);
  }

  // Reverse through the forward pass with the injected z adjoints.
  Tensor a_bar = Tensor::matrix(n, 1);
  for (std::size_t k = depth; k-- > 0;) {
    const auto& layer = net.layers()[k];
    const Tensor& a = acts.outputs[k];
    Tensor dz = z_bar[k];
    for (std::size_t i = 0; i < dz.size(); ++i) {
      dz[i] += first_derivative(layer.activation, a[i]) * a_bar[i];
    }
    const Tensor& prev = k == 0 ? acts.input : acts.outputs[k - 1];
    a_bar = accumulate_layer(layer, prev, dz, grads.layers[k], k > 0);
  }
  return grads;
}

}  // namespace pgan::nn
