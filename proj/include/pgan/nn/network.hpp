#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pgan/common/rng.hpp"
#include "pgan/nn/tensor.hpp"

namespace pgan::nn {

enum class Activation : std::uint8_t { linear = 0, relu = 1, tanh = 2, sigmoid = 3, softmax = 4 };

std::string_view to_string(Activation a);
std::optional<Activation> parse_activation(std::string_view name);

struct DenseLayer {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]
  Activation activation = Activation::linear;

  std::size_t in() const { return weight.shape()[1]; }
  std::size_t out() const { return weight.shape()[0]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Shape of one dense layer, used to build a freshly initialised network.
struct LayerSpec {
  std::size_t out;
  Activation activation;
};

/// Ordered stack of dense layers. A network with no layers is the identity.
class Network {
 public:
  Network() = default;
  explicit Network(std::vector<DenseLayer> layers);

  /// Glorot-uniform weights, zero biases.
  static Network build(std::size_t input_size, const std::vector<LayerSpec>& specs, Rng& rng);

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  std::size_t depth() const noexcept { return layers_.size(); }
  bool empty() const noexcept { return layers_.empty(); }

  std::size_t input_size() const;
  std::size_t output_size() const;
  std::size_t parameter_count() const;
  Activation output_activation() const;

  /// Throws ConsistencyError if layer widths do not chain or softmax is
  /// used anywhere but the last layer.
  void validate() const;

  friend bool operator==(const Network&, const Network&) = default;

 private:
  std::vector<DenseLayer> layers_;
};

/// Input batch plus each layer's post-activation output.
struct Activations {
  Tensor input;
  std::vector<Tensor> outputs;

  const Tensor& output() const { return outputs.empty() ? input : outputs.back(); }
};

struct LayerGrads {
  Tensor weight;
  Tensor bias;
};

/// Gradients mirroring a Network's parameter layout.
struct ParamGrads {
  std::vector<LayerGrads> layers;

  static ParamGrads zeros_like(const Network& net);
  void add_scaled(const ParamGrads& other, double scale);
  void scale(double factor);
  bool all_finite() const;
};

struct Backward {
  ParamGrads params;
  Tensor input;
};

Activations forward(const Network& net, const Tensor& batch);

/// Convenience: final output only.
Tensor predict(const Network& net, const Tensor& batch);

/// Reverse-mode gradients for the scalar whose derivative w.r.t. the network
/// output is `output_grad`.
Backward backward(const Network& net, const Activations& acts, const Tensor& output_grad);

/// Derivative of a scalar-output network with respect to its input, row by
/// row: entry (r, c) is d out_r / d x_{r,c}.
Tensor input_gradient(const Network& net, const Activations& acts);

/// Parameter gradients of  sum_{r,c} seed(r,c) * input_gradient(r,c).
///
/// This is reverse mode through the input-gradient computation itself
/// (double backprop), needed for gradient-penalised critics. Only
/// scalar-output networks without softmax are supported.
ParamGrads input_gradient_backward(const Network& net, const Activations& acts, const Tensor& seed);

}  // namespace pgan::nn
