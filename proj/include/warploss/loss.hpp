#ifndef WARPLOSS_LOSS_HPP_
#define WARPLOSS_LOSS_HPP_

#include <vector>

#include "warploss/geometry.hpp"
#include "warploss/warp.hpp"

namespace warploss {

struct LossConfig {
  WarpPair warp{WarpSpec::identity(), WarpSpec::identity()};
  double temperature = 1.0;
  // Shifted log-sum-exp. On by default; the loss then stays finite for
  // arbitrarily large warped distance gaps.
  bool stability_shift = true;
};

struct LabeledBatch {
  std::vector<Vec> embeddings;
  std::vector<int> labels;

  // Throws unless sizes agree, dimensions agree and labels are in [0, C).
  void validate(int num_classes) const;
  std::size_t size() const { return embeddings.size(); }
};

struct ProxySet {
  std::vector<Vec> proxies;  // one per class

  int num_classes() const { return static_cast<int>(proxies.size()); }
  std::size_t dim() const { return proxies.empty() ? 0 : proxies.front().size(); }
  void validate() const;
};

struct LossGrad {
  double loss = 0.0;
  std::vector<Vec> d_embeddings;
  std::vector<Vec> d_proxies;
};

// log(1 + exp((f1(||e-p_c||) - f2(||e-p_cprime||)) / T)). With identity
// warps and T = 1 this is the plain inverted euclidean softmax CE restricted
// to two classes.
double binary_loss(const Vec& e, const ProxyPair& pair, const LossConfig& cfg);

// log(1 + sum_{j != y} exp((f1(||e-p_y||) - f2(||e-p_j||)) / T)).
double multiclass_loss(const Vec& e, int y, const ProxySet& proxies, const LossConfig& cfg);

// Mean multiclass loss over the batch plus exact analytic gradients with
// respect to every embedding and every proxy. Distances below 1e-12 have
// their direction term replaced by the zero vector.
LossGrad batch_loss_grad(const LabeledBatch& batch, const ProxySet& proxies,
                         const LossConfig& cfg);

std::vector<double> per_sample_losses(const LabeledBatch& batch, const ProxySet& proxies,
                                      const LossConfig& cfg);

}  // namespace warploss

#endif  // WARPLOSS_LOSS_HPP_
