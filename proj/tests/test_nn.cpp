#include <cmath>
#include <functional>

#include "doctest.h"
#include "pgan/common/error.hpp"
#include "pgan/nn/adam.hpp"
#include "pgan/nn/gradcheck.hpp"
#include "pgan/nn/loss.hpp"
#include "pgan/nn/network.hpp"
#include "pgan/nn/serialize.hpp"

using namespace pgan;
using namespace pgan::nn;

namespace {

DenseLayer layer(std::initializer_list<std::initializer_list<double>> w, std::vector<double> b,
                 Activation act) {
  Tensor weight = Tensor::from_rows(w);
  const std::size_t out = weight.rows();
  return DenseLayer{std::move(weight), Tensor({out}, std::move(b)), act};
}

Tensor random_batch(std::size_t n, std::size_t d, Rng& rng) {
  Tensor t = Tensor::matrix(n, d);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

// Independent oracle: central differences of an arbitrary scalar function of
// the parameters, with no use of backward() or grad_check().
double fd_max_rel_error(Network& net, const ParamGrads& analytic, const std::function<double()>& f) {
  double worst = 0.0;
  const double h = 1e-5;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    auto run = [&](Tensor& p, const Tensor& g) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double s = p[i];
        p[i] = s + h;
        const double a = f();
        p[i] = s - h;
        const double b = f();
        p[i] = s;
        const double num = (a - b) / (2 * h);
        const double den = std::max({std::abs(num), std::abs(g[i]), 1e-6});
        worst = std::max(worst, std::abs(num - g[i]) / den);
      }
    };
    run(net.layers()[l].weight, analytic.layers[l].weight);
    run(net.layers()[l].bias, analytic.layers[l].bias);
  }
  return worst;
}

}  // namespace

TEST_CASE("forward: identity linear layer") {
  Network net({layer({{1.0}}, {0.0}, Activation::linear)});
  CHECK(predict(net, Tensor::from_rows({{3.0}}))(0, 0) == 3.0);
}

TEST_CASE("forward: relu splits sign") {
  Network net({layer({{1.0}, {-1.0}}, {0.0, 0.0}, Activation::relu)});
  const Tensor out = predict(net, Tensor::from_rows({{2.0}}));
  CHECK(out(0, 0) == 2.0);
  CHECK(out(0, 1) == 0.0);
}

TEST_CASE("forward: softmax over equal logits is uniform") {
  Network net({layer({{0.0}, {0.0}, {0.0}, {0.0}}, {1.0, 1.0, 1.0, 1.0}, Activation::softmax)});
  const Tensor out = predict(net, Tensor::from_rows({{5.0}}));
  for (std::size_t c = 0; c < 4; ++c) CHECK(out(0, c) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("forward: shape mismatch names the layer") {
  Network net({layer({{1.0, 0.0}}, {0.0}, Activation::linear),
               layer({{1.0}}, {0.0}, Activation::linear)});
  try {
    forward(net, Tensor::from_rows({{1.0, 2.0, 3.0}}));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
  }
}

TEST_CASE("network validation") {
  CHECK_THROWS_AS(Network({layer({{1.0}}, {0.0}, Activation::softmax),
                           layer({{1.0}}, {0.0}, Activation::linear)}),
                  ConsistencyError);
  CHECK_THROWS_AS(Network({layer({{1.0, 1.0}}, {0.0}, Activation::linear),
                           layer({{1.0, 1.0}}, {0.0}, Activation::linear)}),
                  ConsistencyError);
}

TEST_CASE("backward: single linear unit product rule") {
  const double w = 0.7;
  Network net({layer({{w}}, {0.0}, Activation::linear)});
  const auto acts = forward(net, Tensor::from_rows({{2.0}}));
  const auto g = backward(net, acts, Tensor::from_rows({{1.0}}));
  CHECK(g.params.layers[0].weight[0] == doctest::Approx(2.0));
  CHECK(g.input(0, 0) == doctest::Approx(w));
}

TEST_CASE("backward: dead relu passes no gradient") {
  Network net({layer({{1.0}}, {0.0}, Activation::relu)});
  const auto acts = forward(net, Tensor::from_rows({{-3.0}}));
  const auto g = backward(net, acts, Tensor::from_rows({{1.0}}));
  CHECK(g.input(0, 0) == 0.0);
  CHECK(g.params.layers[0].weight[0] == 0.0);
}

TEST_CASE("backward: mismatched activations are rejected") {
  Rng rng(1);
  const Network net = Network::build(2, {{3, Activation::relu}, {1, Activation::linear}}, rng);
  auto acts = forward(net, random_batch(4, 2, rng));
  acts.outputs.pop_back();
  CHECK_THROWS_AS(backward(net, acts, Tensor::matrix(4, 1, 1.0)), ConsistencyError);
}

TEST_CASE("backward matches central differences on random two-layer nets") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    Network net = Network::build(3, {{6, Activation::tanh}, {2, Activation::linear}}, rng);
    const Tensor batch = random_batch(4, 3, rng);
    const Tensor target = random_batch(4, 2, rng);
    const auto acts = forward(net, batch);
    const auto analytic = backward(net, acts, mean_squared_error(acts.output(), target).grad).params;
    const double err =
        fd_max_rel_error(net, analytic, [&] { return mean_squared_error(predict(net, batch), target).value; });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("input_gradient_backward matches central differences") {
  for (Activation act : {Activation::relu, Activation::tanh, Activation::sigmoid}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed + 100);
      Network net = Network::build(3, {{5, act}, {4, act}, {1, Activation::linear}}, rng);
      const Tensor batch = random_batch(3, 3, rng);
      // Penalty-shaped objective: sum_r (||g_r|| - 1)^2.
      auto penalty = [&](Tensor* seed_out) {
        const Tensor g = input_gradient(net, forward(net, batch));
        double total = 0.0;
        if (seed_out) *seed_out = Tensor(g.shape(), 0.0);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          double norm = 0.0;
          for (double v : g.row(r)) norm += v * v;
          norm = std::sqrt(norm);
          total += (norm - 1.0) * (norm - 1.0);
          if (seed_out) {
            for (std::size_t c = 0; c < g.cols(); ++c) (*seed_out)(r, c) = 2.0 * (norm - 1.0) * g(r, c) / norm;
          }
        }
        return total;
      };
      Tensor seed_m;
      penalty(&seed_m);
      const auto analytic = input_gradient_backward(net, forward(net, batch), seed_m);
      CHECK(fd_max_rel_error(net, analytic, [&] { return penalty(nullptr); }) < 1e-4);
    }
  }
}

TEST_CASE("adam: first step hand trace") {
  Network net({layer({{1.0}}, {0.0}, Activation::linear)});
  auto state = AdamState::for_network(net, AdamConfig{2e-4, 0.6, 0.999, 1e-8});
  ParamGrads g = ParamGrads::zeros_like(net);
  g.layers[0].weight[0] = 1.0;
  adam_step(net, g, state);
  CHECK(state.step_count == 1);
  CHECK(state.first_moment.layers[0].weight[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(state.second_moment.layers[0].weight[0] == doctest::Approx(0.001).epsilon(1e-12));
  // m_hat = v_hat = 1  =>  w' = 1 - lr / (1 + eps)
  CHECK(net.layers()[0].weight[0] == doctest::Approx(1.0 - 2e-4 / (1.0 + 1e-8)).epsilon(1e-14));
  CHECK(net.layers()[0].weight[0] == doctest::Approx(0.99980).epsilon(1e-9));
  CHECK(net.layers()[0].bias[0] == 0.0);
}

TEST_CASE("adam: zero gradient is the identity") {
  Rng rng(3);
  Network net = Network::build(4, {{5, Activation::relu}, {2, Activation::softmax}}, rng);
  const Network before = net;
  auto state = AdamState::for_network(net, {});
  for (int i = 0; i < 10; ++i) adam_step(net, ParamGrads::zeros_like(net), state);
  CHECK(net == before);
  CHECK(state.step_count == 10);
}

TEST_CASE("adam: ascend with g equals descend with -g") {
  Rng rng(4);
  Network a = Network::build(2, {{3, Activation::tanh}}, rng);
  Network b = a;
  auto sa = AdamState::for_network(a, {});
  auto sb = AdamState::for_network(b, {});
  ParamGrads g = ParamGrads::zeros_like(a);
  for (auto& l : g.layers) {
    for (double& v : l.weight.values()) v = rng.normal();
  }
  ParamGrads neg = g;
  neg.scale(-1.0);
  adam_step(a, g, sa, Direction::ascend);
  adam_step(b, neg, sb, Direction::descend);
  CHECK(a == b);
}

TEST_CASE("adam: error paths") {
  Rng rng(5);
  Network net = Network::build(2, {{3, Activation::tanh}, {1, Activation::linear}}, rng);
  auto state = AdamState::for_network(net, {});
  ParamGrads g = ParamGrads::zeros_like(net);
  g.layers[1].bias[0] = std::nan("");
  try {
    adam_step(net, g, state);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
  }
  CHECK(state.step_count == 0);
  ParamGrads wrong;
  CHECK_THROWS_AS(adam_step(net, wrong, state), DimensionError);
}

TEST_CASE("adam: identical seeds give bitwise identical parameters") {
  auto run = [] {
    Rng rng(11);
    Network net = Network::build(3, {{8, Activation::relu}, {2, Activation::softmax}}, rng);
    auto state = AdamState::for_network(net, {1e-2, 0.6, 0.999, 1e-8});
    const Tensor x = random_batch(16, 3, rng);
    std::vector<int> y(16);
    for (auto& v : y) v = static_cast<int>(rng.index(2));
    for (int i = 0; i < 50; ++i) {
      const auto acts = forward(net, x);
      adam_step(net, backward(net, acts, cross_entropy(acts.output(), y).grad).params, state);
    }
    return net;
  };
  CHECK(run() == run());
}

TEST_CASE("grad_check examples") {
  Rng rng(7);
  const Tensor batch = random_batch(5, 3, rng);
  const Network linear = Network::build(3, {{2, Activation::linear}}, rng);
  CHECK(grad_check(linear, batch, LossKind::mean_squared) < 1e-6);
  const Network soft = Network::build(3, {{4, Activation::relu}, {3, Activation::softmax}}, rng);
  CHECK(grad_check(soft, batch, LossKind::cross_entropy) < 1e-4);
  CHECK(grad_check(Network{}, batch, LossKind::mean_squared) == 0.0);
}

TEST_CASE("gradcheck suite passes over 20 seeds") {
  const auto cases = run_gradcheck_suite(20);
  CHECK(cases.size() == 24);
  for (const auto& c : cases) {
    INFO(c.name << " max rel err " << c.max_relative_error);
    CHECK(c.passed);
  }
}

TEST_CASE("cross_entropy examples") {
  const std::vector<int> zero{0};
  CHECK(cross_entropy(Tensor::from_rows({{1.0, 0.0}}), zero).value == 0.0);
  const auto uniform = cross_entropy(Tensor::from_rows({{0.25, 0.25, 0.25, 0.25}}), zero);
  CHECK(uniform.value == doctest::Approx(std::log(4.0)));
  CHECK(uniform.value == doctest::Approx(1.3863).epsilon(1e-4));
  const std::vector<double> w{0.3, 1.0};
  const auto weighted = cross_entropy(Tensor::from_rows({{0.8, 0.2}}), zero, std::span<const double>(w));
  CHECK(weighted.value == doctest::Approx(0.3 * -std::log(0.8)));
  CHECK(weighted.value == doctest::Approx(0.06694).epsilon(1e-4));
  CHECK_FALSE(weighted.clamped);
  const auto clamped = cross_entropy(Tensor::from_rows({{0.0, 1.0}}), zero);
  CHECK(clamped.clamped);
  CHECK(clamped.value == doctest::Approx(-std::log(kLogFloor)));
  CHECK_THROWS_AS(cross_entropy(Tensor::from_rows({{0.5, 0.5}}), std::vector<int>{2}), DomainError);
}

TEST_CASE("softmax rows sum to one and stay positive") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    Network net = Network::build(4, {{6, Activation::relu}, {5, Activation::softmax}}, rng);
    Tensor x = random_batch(10, 4, rng);
    for (double& v : x.values()) v *= 50.0;
    const Tensor p = predict(net, x);
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double s = 0.0;
      for (double v : p.row(r)) {
        CHECK(v > 0.0);
        s += v;
      }
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("blob round trip and error paths") {
  Rng rng(9);
  const Network net = Network::build(3, {{4, Activation::sigmoid}, {2, Activation::softmax}}, rng);
  const auto bytes = encode_network(net);
  CHECK(bytes[0] == 'P');
  CHECK(bytes[3] == 'N');
  CHECK(bytes[4] == 1);  // version, little-endian
  CHECK(bytes[5] == 0);
  CHECK(decode_network(bytes) == net);

  Blob blob;
  blob.put("net", net);
  blob.put("priors", std::vector<double>{0.25, 0.75});
  blob.put("bank/0", Blob::Indices{3, 1, 4});
  blob.put("name", std::string("blobs"));
  const Blob back = decode(encode(blob));
  CHECK(back.network("net") == net);
  CHECK(back.doubles("priors") == std::vector<double>{0.25, 0.75});
  CHECK(back.indices("bank/0") == Blob::Indices{3, 1, 4});
  CHECK(back.text("name") == "blobs");
  CHECK_THROWS_AS(back.network("priors"), FormatError);

  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(decode_network(truncated), FormatError);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_network(bad), FormatError);
}
