#include "warploss/embedder.hpp"

#include <cmath>
#include <stdexcept>

#include "warploss/rng.hpp"

namespace warploss {

namespace {
constexpr double kLayerNormEps = 1e-5;
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation '" + name + "' (expected relu or tanh)");
}

std::string activation_to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "tanh";
}

void EmbedderSpec::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("EmbedderSpec: need at least one layer");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("EmbedderSpec: widths must be >= 1");
}

std::vector<std::vector<double>*> EmbedderParams::tensors() {
  std::vector<std::vector<double>*> out;
  for (auto& w : weights) out.push_back(&w);
  for (auto& b : biases) out.push_back(&b);
  if (!ln_gain.empty()) {
    out.push_back(&ln_gain);
    out.push_back(&ln_bias);
  }
  return out;
}

std::vector<const std::vector<double>*> EmbedderParams::tensors() const {
  std::vector<const std::vector<double>*> out;
  for (auto& w : weights) out.push_back(&w);
  for (auto& b : biases) out.push_back(&b);
  if (!ln_gain.empty()) {
    out.push_back(&ln_gain);
    out.push_back(&ln_bias);
  }
  return out;
}

EmbedderParams init_embedder(const EmbedderSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  EmbedderParams p;
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int in = spec.widths[l], out = spec.widths[l + 1];
    std::vector<double> w(static_cast<std::size_t>(out) * in);
    const double std_dev = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& v : w) v = rng.gaussian(0.0, std_dev);
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(out, 0.0);
  }
  if (spec.layer_norm_output) {
    p.ln_gain.assign(spec.output_dim(), 1.0);
    p.ln_bias.assign(spec.output_dim(), 0.0);
  }
  return p;
}

std::vector<double> forward(const EmbedderSpec& spec, const EmbedderParams& params,
                            const std::vector<Vec>& inputs, ForwardCache* cache) {
  spec.validate();
  const std::size_t batch = inputs.size();
  const int in_dim = spec.input_dim();
  std::vector<double> a(batch * in_dim);
  for (std::size_t i = 0; i < batch; ++i) {
    if (static_cast<int>(inputs[i].size()) != in_dim)
      throw std::invalid_argument("forward: input width mismatch");
    for (int k = 0; k < in_dim; ++k) a[i * in_dim + k] = inputs[i][k];
  }

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.activations.clear();
  c.batch = batch;
  c.activations.push_back(a);

  for (int l = 0; l < spec.num_layers(); ++l) {
    const int in = spec.widths[l], out = spec.widths[l + 1];
    const std::vector<double>& w = params.weights[l];
    const std::vector<double>& b = params.biases[l];
    std::vector<double> z(batch * out);
    for (std::size_t i = 0; i < batch; ++i) {
      const double* ai = a.data() + i * in;
      double* zi = z.data() + i * out;
      for (int o = 0; o < out; ++o) {
        double s = b[o];
        const double* wo = w.data() + static_cast<std::size_t>(o) * in;
        for (int k = 0; k < in; ++k) s += wo[k] * ai[k];
        zi[o] = s;
      }
    }
    if (l + 1 < spec.num_layers()) {
      if (spec.activation == Activation::kRelu) {
        for (double& v : z) v = v > 0.0 ? v : 0.0;
      } else {
        for (double& v : z) v = std::tanh(v);
      }
    }
    a = std::move(z);
    c.activations.push_back(a);
  }

  if (spec.layer_norm_output) {
    const int out = spec.output_dim();
    c.ln_xhat.resize(batch * out);
    c.ln_inv_sigma.resize(batch);
    std::vector<double> e(batch * out);
    for (std::size_t i = 0; i < batch; ++i) {
      const double* xi = a.data() + i * out;
      double mu = 0.0;
      for (int k = 0; k < out; ++k) mu += xi[k];
      mu /= out;
      double var = 0.0;
      for (int k = 0; k < out; ++k) var += (xi[k] - mu) * (xi[k] - mu);
      var /= out;
      const double inv_sigma = 1.0 / std::sqrt(var + kLayerNormEps);
      c.ln_inv_sigma[i] = inv_sigma;
      for (int k = 0; k < out; ++k) {
        const double xh = (xi[k] - mu) * inv_sigma;
        c.ln_xhat[i * out + k] = xh;
        e[i * out + k] = params.ln_gain[k] * xh + params.ln_bias[k];
      }
    }
    return e;
  }
  return a;
}

std::vector<Vec> forward_points(const EmbedderSpec& spec, const EmbedderParams& params,
                                const std::vector<Vec>& inputs, ForwardCache* cache) {
  const std::vector<double> flat = forward(spec, params, inputs, cache);
  const int out = spec.output_dim();
  std::vector<Vec> pts(inputs.size(), Vec(out));
  for (std::size_t i = 0; i < inputs.size(); ++i)
    for (int k = 0; k < out; ++k) pts[i][k] = flat[i * out + k];
  return pts;
}

EmbedderParams backward(const EmbedderSpec& spec, const EmbedderParams& params,
                        const ForwardCache& cache, const std::vector<Vec>& d_embeddings) {
  const std::size_t batch = cache.batch;
  if (d_embeddings.size() != batch)
    throw std::invalid_argument("backward: upstream gradient batch mismatch");
  const int out_dim = spec.output_dim();

  EmbedderParams g;
  for (int l = 0; l < spec.num_layers(); ++l) {
    g.weights.emplace_back(params.weights[l].size(), 0.0);
    g.biases.emplace_back(params.biases[l].size(), 0.0);
  }
  if (spec.layer_norm_output) {
    g.ln_gain.assign(out_dim, 0.0);
    g.ln_bias.assign(out_dim, 0.0);
  }

  std::vector<double> d(batch * out_dim);
  for (std::size_t i = 0; i < batch; ++i) {
    if (static_cast<int>(d_embeddings[i].size()) != out_dim)
      throw std::invalid_argument("backward: upstream gradient width mismatch");
    for (int k = 0; k < out_dim; ++k) d[i * out_dim + k] = d_embeddings[i][k];
  }

  if (spec.layer_norm_output) {
    std::vector<double> dx(batch * out_dim);
    for (std::size_t i = 0; i < batch; ++i) {
      const double* dy = d.data() + i * out_dim;
      const double* xh = cache.ln_xhat.data() + i * out_dim;
      const double inv_sigma = cache.ln_inv_sigma[i];
      double mean_dxh = 0.0, mean_dxh_xh = 0.0;
      for (int k = 0; k < out_dim; ++k) {
        const double dxh = params.ln_gain[k] * dy[k];
        g.ln_gain[k] += dy[k] * xh[k];
        g.ln_bias[k] += dy[k];
        mean_dxh += dxh;
        mean_dxh_xh += dxh * xh[k];
      }
      mean_dxh /= out_dim;
      mean_dxh_xh /= out_dim;
      for (int k = 0; k < out_dim; ++k) {
        const double dxh = params.ln_gain[k] * dy[k];
        dx[i * out_dim + k] = inv_sigma * (dxh - mean_dxh - xh[k] * mean_dxh_xh);
      }
    }
    d = std::move(dx);
  }

  for (int l = spec.num_layers() - 1; l >= 0; --l) {
    const int in = spec.widths[l], out = spec.widths[l + 1];
    const std::vector<double>& a_in = cache.activations[l];
    // d currently holds dZ for layer l (the last layer has no activation;
    // hidden layers get the activation derivative applied below before the
    // next iteration).
    for (std::size_t i = 0; i < batch; ++i) {
      const double* di = d.data() + i * out;
      const double* ai = a_in.data() + i * in;
      for (int o = 0; o < out; ++o) {
        g.biases[l][o] += di[o];
        double* go = g.weights[l].data() + static_cast<std::size_t>(o) * in;
        for (int k = 0; k < in; ++k) go[k] += di[o] * ai[k];
      }
    }
    if (l == 0) break;
    std::vector<double> d_prev(batch * in, 0.0);
    const std::vector<double>& w = params.weights[l];
    const std::vector<double>& a_prev = cache.activations[l];  // post-activation of layer l-1
    for (std::size_t i = 0; i < batch; ++i) {
      const double* di = d.data() + i * out;
      double* dpi = d_prev.data() + i * in;
      for (int o = 0; o < out; ++o) {
        const double* wo = w.data() + static_cast<std::size_t>(o) * in;
        for (int k = 0; k < in; ++k) dpi[k] += di[o] * wo[k];
      }
      const double* api = a_prev.data() + i * in;
      if (spec.activation == Activation::kRelu) {
        for (int k = 0; k < in; ++k)
          if (api[k] <= 0.0) dpi[k] = 0.0;
      } else {
        for (int k = 0; k < in; ++k) dpi[k] *= 1.0 - api[k] * api[k];
      }
    }
    d = std::move(d_prev);
  }
  return g;
}

}  // namespace warploss
