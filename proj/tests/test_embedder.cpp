#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "warploss/embedder.hpp"
#include "warploss/loss.hpp"
#include "warploss/rng.hpp"

using namespace warploss;

TEST_CASE("identity-initialized single linear layer reproduces its input") {
  EmbedderSpec spec{{3, 3}, Activation::kRelu, false};
  EmbedderParams p;
  p.weights = {{1, 0, 0, 0, 1, 0, 0, 0, 1}};
  p.biases = {{0, 0, 0}};
  const std::vector<Vec> inputs = {Vec{1.5, -2.0, 0.25}};
  const auto out = forward_points(spec, p, inputs);
  CHECK(out[0] == inputs[0]);
}

TEST_CASE("layer norm of a constant vector collapses to the bias") {
  EmbedderSpec spec{{2, 4}, Activation::kRelu, true};
  EmbedderParams p;
  p.weights = {{0, 0, 0, 0, 0, 0, 0, 0}};
  p.biases = {{3, 3, 3, 3}};  // constant pre-norm output
  p.ln_gain = {2, 2, 2, 2};
  p.ln_bias = {0.5, -0.5, 1.5, 0};
  const auto out = forward_points(spec, p, {Vec{1, 2}});
  for (int k = 0; k < 4; ++k) CHECK(out[0][k] == doctest::Approx(p.ln_bias[k]).epsilon(1e-9));
}

TEST_CASE("forward is deterministic") {
  EmbedderSpec spec{{4, 16, 3}, Activation::kTanh, true};
  const EmbedderParams p = init_embedder(spec, 11);
  Rng rng(5);
  std::vector<Vec> inputs(7, Vec(4));
  for (auto& x : inputs)
    for (double& v : x) v = rng.gaussian();
  const auto a = forward(spec, p, inputs);
  const auto b = forward(spec, p, inputs);
  CHECK(a == b);
}

TEST_CASE("init_embedder fan-in scaling is reproducible") {
  EmbedderSpec spec{{64, 32}, Activation::kRelu, false};
  const EmbedderParams a = init_embedder(spec, 99);
  const EmbedderParams b = init_embedder(spec, 99);
  CHECK(a.weights == b.weights);
  double var = 0.0;
  for (double w : a.weights[0]) var += w * w;
  var /= static_cast<double>(a.weights[0].size());
  CHECK(var == doctest::Approx(1.0 / 64.0).epsilon(0.15));
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  EmbedderSpec spec{{3, 8, 2}, Activation::kRelu, true};
  const EmbedderParams p = init_embedder(spec, 1);
  ForwardCache cache;
  forward(spec, p, {Vec{1, 2, 3}, Vec{-1, 0, 2}}, &cache);
  const EmbedderParams g = backward(spec, p, cache, {Vec{0, 0}, Vec{0, 0}});
  for (const auto& w : g.weights)
    for (double v : w) CHECK(v == 0.0);
  for (double v : g.ln_gain) CHECK(v == 0.0);
}

TEST_CASE("single linear layer gradient is the outer product") {
  EmbedderSpec spec{{3, 2}, Activation::kRelu, false};
  const EmbedderParams p = init_embedder(spec, 2);
  const Vec x{0.5, -1.0, 2.0};
  const Vec de{0.7, -0.2};
  ForwardCache cache;
  forward(spec, p, {x}, &cache);
  const EmbedderParams g = backward(spec, p, cache, {de});
  for (int o = 0; o < 2; ++o) {
    CHECK(g.biases[0][o] == doctest::Approx(de[o]));
    for (int k = 0; k < 3; ++k)
      CHECK(g.weights[0][o * 3 + k] == doctest::Approx(de[o] * x[k]).epsilon(1e-14));
  }
}

namespace {

// Scalar head for finite differences: mean multiclass loss of the embedded
// batch against fixed proxies.
double loss_of_params(const EmbedderSpec& spec, const EmbedderParams& params,
                      const std::vector<Vec>& inputs, const std::vector<int>& labels,
                      const ProxySet& proxies, const LossConfig& cfg) {
  LabeledBatch batch;
  batch.embeddings = forward_points(spec, params, inputs);
  batch.labels = labels;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    total += multiclass_loss(batch.embeddings[i], batch.labels[i], proxies, cfg);
  return total / static_cast<double>(batch.size());
}

}  // namespace

TEST_CASE("backpropagated parameter gradients match finite differences") {
  for (const bool layer_norm : {false, true}) {
    CAPTURE(layer_norm);
    EmbedderSpec spec{{3, 8, 4}, Activation::kTanh, layer_norm};
    EmbedderParams params = init_embedder(spec, 21);
    Rng rng(22);
    std::vector<Vec> inputs(6, Vec(3));
    std::vector<int> labels(6);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      for (double& v : inputs[i]) v = rng.gaussian();
      labels[i] = static_cast<int>(rng.uniform_index(3));
    }
    ProxySet proxies;
    proxies.proxies.assign(3, Vec(4));
    for (auto& p : proxies.proxies)
      for (double& v : p) v = rng.gaussian(0.0, 2.0);
    const LossConfig cfg{parse_warp_pair("pwl(2,0.5,2,1) - t"), 1.0, true};

    ForwardCache cache;
    LabeledBatch batch;
    batch.embeddings = forward_points(spec, params, inputs, &cache);
    batch.labels = labels;
    const LossGrad lg = batch_loss_grad(batch, proxies, cfg);
    const EmbedderParams analytic = backward(spec, params, cache, lg.d_embeddings);

    auto tensors = params.tensors();
    auto grads = std::as_const(analytic).tensors();
    for (std::size_t t = 0; t < tensors.size(); ++t) {
      for (std::size_t i = 0; i < tensors[t]->size(); ++i) {
        const double fd = oracles::central_diff(
            [&](const std::vector<double>& x) {
              EmbedderParams moved = params;
              *moved.tensors()[t] = x;
              return loss_of_params(spec, moved, inputs, labels, proxies, cfg);
            },
            *tensors[t], i);
        CHECK(oracles::rel_err((*grads[t])[i], fd) < 1e-4);
      }
    }
  }
}

TEST_CASE("shape validation") {
  EmbedderSpec spec{{3, 2}, Activation::kRelu, false};
  const EmbedderParams p = init_embedder(spec, 3);
  CHECK_THROWS_AS(forward(spec, p, {Vec{1, 2}}), std::invalid_argument);
  CHECK_THROWS_AS((EmbedderSpec{{3}, Activation::kRelu, false}.validate()),
                  std::invalid_argument);
  CHECK_THROWS_AS((EmbedderSpec{{3, 0}, Activation::kRelu, false}.validate()),
                  std::invalid_argument);
  CHECK_THROWS_AS(activation_from_string("gelu"), std::invalid_argument);
}
