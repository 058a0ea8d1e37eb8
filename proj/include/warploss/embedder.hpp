#ifndef WARPLOSS_EMBEDDER_HPP_
#define WARPLOSS_EMBEDDER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "warploss/vec.hpp"

namespace warploss {

enum class Activation { kRelu, kTanh };

Activation activation_from_string(const std::string& name);
std::string activation_to_string(Activation a);

// A small fully connected embedder: affine layers with the activation on
// every hidden layer, a linear output, and optional layer normalization of
// the output (normalize across embedding dims, then affine gain/bias).
struct EmbedderSpec {
  std::vector<int> widths;  // input, hidden..., embedding dim
  Activation activation = Activation::kRelu;
  bool layer_norm_output = false;

  void validate() const;
  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  int num_layers() const { return static_cast<int>(widths.size()) - 1; }
};

struct EmbedderParams {
  // weights[l] is row-major widths[l+1] x widths[l].
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  std::vector<double> ln_gain;  // empty unless layer_norm_output
  std::vector<double> ln_bias;

  // All tensors in a fixed order, for the optimizer.
  std::vector<std::vector<double>*> tensors();
  std::vector<const std::vector<double>*> tensors() const;
};

// Gaussian fan-in init (std = 1/sqrt(fan_in)), zero biases, unit gains.
EmbedderParams init_embedder(const EmbedderSpec& spec, std::uint64_t seed);

struct ForwardCache {
  // activations[0] is the input batch; activations[l+1] the post-activation
  // output of layer l (pre-layer-norm for the last layer). Flattened
  // batch-major: sample * width + unit.
  std::vector<std::vector<double>> activations;
  std::vector<double> ln_xhat;       // batch x out
  std::vector<double> ln_inv_sigma;  // batch
  std::size_t batch = 0;
};

// Returns embeddings as one flattened batch x output_dim buffer.
std::vector<double> forward(const EmbedderSpec& spec, const EmbedderParams& params,
                            const std::vector<Vec>& inputs, ForwardCache* cache = nullptr);

std::vector<Vec> forward_points(const EmbedderSpec& spec, const EmbedderParams& params,
                                const std::vector<Vec>& inputs, ForwardCache* cache = nullptr);

// Exact reverse-mode gradients for every weight, bias and layer-norm
// parameter. d_embeddings is batch x output_dim, matching forward's output.
EmbedderParams backward(const EmbedderSpec& spec, const EmbedderParams& params,
                        const ForwardCache& cache, const std::vector<Vec>& d_embeddings);

}  // namespace warploss

#endif  // WARPLOSS_EMBEDDER_HPP_
