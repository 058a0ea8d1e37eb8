#include "warploss/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace warploss {

namespace {

constexpr double kZeroDistance = 1e-12;

void check_cfg(const LossConfig& cfg) {
  if (!(cfg.temperature > 0.0)) throw std::invalid_argument("LossConfig: temperature must be > 0");
}

}  // namespace

void LabeledBatch::validate(int num_classes) const {
  if (embeddings.size() != labels.size())
    throw std::invalid_argument("LabeledBatch: embeddings/labels length mismatch");
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].size() != embeddings.front().size())
      throw std::invalid_argument("LabeledBatch: embeddings differ in dimension");
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw std::invalid_argument("LabeledBatch: label " + std::to_string(labels[i]) +
                                  " out of range [0," + std::to_string(num_classes) + ")");
  }
}

void ProxySet::validate() const {
  if (proxies.size() < 2) throw std::invalid_argument("ProxySet: need at least 2 classes");
  for (const Vec& p : proxies)
    if (p.size() != proxies.front().size())
      throw std::invalid_argument("ProxySet: proxies differ in dimension");
}

double binary_loss(const Vec& e, const ProxyPair& pair, const LossConfig& cfg) {
  check_cfg(cfg);
  const double t1 = distance(e, pair.p_c);
  const double t2 = distance(e, pair.p_cprime);
  const double z = (cfg.warp.f1.value(t1) - cfg.warp.f2.value(t2)) / cfg.temperature;
  if (!cfg.stability_shift) return std::log(1.0 + std::exp(z));
  // Shifted form; the m = 0 branch uses log1p so deeply negative exponents
  // keep their (tiny, strictly monotone) loss instead of rounding to 0.
  if (z <= 0.0) return std::log1p(std::exp(z));
  return z + std::log1p(std::exp(-z));
}

double multiclass_loss(const Vec& e, int y, const ProxySet& proxies, const LossConfig& cfg) {
  check_cfg(cfg);
  proxies.validate();
  const int c = proxies.num_classes();
  if (y < 0 || y >= c) throw std::invalid_argument("multiclass_loss: class index out of range");
  const double f1y = cfg.warp.f1.value(distance(e, proxies.proxies[y]));

  std::vector<double> z;
  z.reserve(c - 1);
  double zmax = 0.0;
  for (int j = 0; j < c; ++j) {
    if (j == y) continue;
    const double zj = (f1y - cfg.warp.f2.value(distance(e, proxies.proxies[j]))) / cfg.temperature;
    z.push_back(zj);
    zmax = std::max(zmax, zj);
  }
  if (!cfg.stability_shift) {
    double s = 0.0;
    for (double zj : z) s += std::exp(zj);
    return std::log(1.0 + s);
  }
  // m = max(0, max_j z_j); loss = m + log(exp(-m) + sum exp(z_j - m)),
  // with the implicit-1 term folded through log1p for accuracy.
  if (zmax <= 0.0) {
    double s = 0.0;
    for (double zj : z) s += std::exp(zj);
    return std::log1p(s);
  }
  double s = std::exp(-zmax) - 1.0;
  for (double zj : z) s += std::exp(zj - zmax);
  return zmax + std::log1p(s);
}

LossGrad batch_loss_grad(const LabeledBatch& batch, const ProxySet& proxies,
                         const LossConfig& cfg) {
  check_cfg(cfg);
  proxies.validate();
  const int c = proxies.num_classes();
  batch.validate(c);
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("batch_loss_grad: empty batch");
  const std::size_t dim = batch.embeddings.front().size();
  if (dim != proxies.dim())
    throw std::invalid_argument("batch_loss_grad: embedding/proxy dimension mismatch");

  LossGrad out;
  out.d_embeddings.assign(n, Vec(dim, 0.0));
  out.d_proxies.assign(c, Vec(dim, 0.0));
  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_t = 1.0 / cfg.temperature;

  std::vector<double> w(c, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec& e = batch.embeddings[i];
    const int y = batch.labels[i];
    const double ty = distance(e, proxies.proxies[y]);
    const double f1y = cfg.warp.f1.value(ty);

    // Shifted weights: w_j = exp(z_j - m), w0 = exp(-m); then
    // s_j / (1 + S) = w_j / (w0 + sum w) stays bounded for any z.
    double zmax = 0.0;
    std::vector<double> z(c, 0.0);
    for (int j = 0; j < c; ++j) {
      if (j == y) continue;
      z[j] = (f1y - cfg.warp.f2.value(distance(e, proxies.proxies[j]))) * inv_t;
      zmax = std::max(zmax, z[j]);
    }
    double denom = std::exp(-zmax);
    double wsum = 0.0;
    for (int j = 0; j < c; ++j) {
      if (j == y) {
        w[j] = 0.0;
        continue;
      }
      w[j] = std::exp(z[j] - zmax);
      wsum += w[j];
    }
    denom += wsum;
    // Same log1p evaluation as multiclass_loss (zmax is already >= 0).
    out.loss += (zmax == 0.0 ? std::log1p(wsum)
                             : zmax + std::log1p(std::exp(-zmax) - 1.0 + wsum)) *
                inv_n;

    const double sig = wsum / denom;  // S / (1 + S)
    // f1 term, shared by every j: direction (e - p_y)/t_y unless degenerate.
    if (ty >= kZeroDistance) {
      const double coef = sig * inv_t * cfg.warp.f1.deriv(ty) / ty;
      for (std::size_t k = 0; k < dim; ++k) {
        const double g = coef * (e[k] - proxies.proxies[y][k]);
        out.d_embeddings[i][k] += g;
        out.d_proxies[y][k] -= g * inv_n;
      }
    }
    for (int j = 0; j < c; ++j) {
      if (j == y || w[j] == 0.0) continue;
      const double tj = distance(e, proxies.proxies[j]);
      if (tj < kZeroDistance) continue;
      const double coef = (w[j] / denom) * inv_t * cfg.warp.f2.deriv(tj) / tj;
      for (std::size_t k = 0; k < dim; ++k) {
        const double g = coef * (e[k] - proxies.proxies[j][k]);
        out.d_embeddings[i][k] -= g;
        out.d_proxies[j][k] += g * inv_n;
      }
    }
    // Per-sample embedding gradients are averaged into the batch mean.
    for (std::size_t k = 0; k < dim; ++k) out.d_embeddings[i][k] *= inv_n;
  }
  return out;
}

std::vector<double> per_sample_losses(const LabeledBatch& batch, const ProxySet& proxies,
                                      const LossConfig& cfg) {
  proxies.validate();
  batch.validate(proxies.num_classes());
  if (batch.size() == 0) throw std::invalid_argument("per_sample_losses: empty batch");
  std::vector<double> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i)
    out[i] = multiclass_loss(batch.embeddings[i], batch.labels[i], proxies, cfg);
  return out;
}

}  // namespace warploss
