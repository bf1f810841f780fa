#include "pgan/models/networks.hpp"

#include <algorithm>

#include "pgan/common/error.hpp"

namespace pgan::models {
namespace {

void require_width(const nn::Network& net, const nn::Tensor& batch, const char* what) {
  if (batch.rank() != 2 || batch.cols() != net.input_size()) {
    throw DimensionError(std::string(what) + ": batch " + batch.shape_string() + " but network expects " +
                         std::to_string(net.input_size()) + " columns");
  }
}

}  // namespace

nn::Network make_feature_extractor(std::size_t input_dim, const std::vector<std::size_t>& widths, Rng& rng) {
  std::vector<nn::LayerSpec> specs;
  for (std::size_t w : widths) specs.push_back({w, nn::Activation::relu});
  return nn::Network::build(input_dim, specs, rng);
}

nn::Network make_classifier(std::size_t input_dim, std::size_t num_classes, std::size_t hidden, Rng& rng) {
  std::vector<nn::LayerSpec> specs;
  if (hidden > 0) specs.push_back({hidden, nn::Activation::relu});
  specs.push_back({num_classes, nn::Activation::softmax});
  return nn::Network::build(input_dim, specs, rng);
}

nn::Network make_critic(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  return nn::Network::build(input_dim,
                            {{hidden, nn::Activation::relu},
                             {hidden, nn::Activation::relu},
                             {1, nn::Activation::linear}},
                            rng);
}

nn::Tensor extract_features(const nn::Network& f_net, const nn::Tensor& batch) {
  if (batch.rank() != 2) throw DimensionError("extract_features: batch must be a matrix, got " + batch.shape_string());
  if (f_net.empty()) return batch;
  require_width(f_net, batch, "extract_features");
  return nn::predict(f_net, batch);
}

nn::Tensor critic_score(const nn::Network& d_net, const nn::Tensor& batch) {
  require_width(d_net, batch, "critic_score");
  if (d_net.output_size() != 1) throw ConsistencyError("critic_score: critic must have one output");
  return nn::predict(d_net, batch);
}

nn::Tensor classify(const nn::Network& c_net, const nn::Tensor& batch) {
  require_width(c_net, batch, "classify");
  if (c_net.output_activation() != nn::Activation::softmax) {
    throw ConsistencyError("classify: classifier must end in softmax");
  }
  return nn::predict(c_net, batch);
}

nn::Tensor conditional_input(const nn::Tensor& features, std::span<const int> labels, std::size_t num_classes) {
  return nn::hconcat(features, nn::one_hot(labels, num_classes));
}

std::vector<int> argmax_rows(const nn::Tensor& probs) {
  std::vector<int> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const auto row = probs.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace pgan::models
