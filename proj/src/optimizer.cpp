#include "warploss/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace warploss {

Adam::Adam(AdamConfig cfg, const std::vector<const std::vector<double>*>& params) : cfg_(cfg) {
  if (!(cfg_.lr > 0.0)) throw std::invalid_argument("Adam: lr must be > 0");
  if (!(cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0) || !(cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0))
    throw std::invalid_argument("Adam: betas must be in [0,1)");
  for (const auto* p : params) {
    m_.emplace_back(p->size(), 0.0);
    v_.emplace_back(p->size(), 0.0);
  }
}

bool Adam::step(const std::vector<std::vector<double>*>& params,
                const std::vector<const std::vector<double>*>& grads, double lr_scale) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw std::invalid_argument("Adam: tensor count mismatch");
  for (std::size_t t = 0; t < grads.size(); ++t)
    for (double g : *grads[t])
      if (!std::isfinite(g)) return false;

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double lr = cfg_.lr * lr_scale;
  for (std::size_t t = 0; t < params.size(); ++t) {
    std::vector<double>& p = *params[t];
    const std::vector<double>& g = *grads[t];
    if (p.size() != m_[t].size() || g.size() != m_[t].size())
      throw std::invalid_argument("Adam: tensor shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m_[t][i] = cfg_.beta1 * m_[t][i] + (1.0 - cfg_.beta1) * g[i];
      v_[t][i] = cfg_.beta2 * v_[t][i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m_[t][i] / bc1;
      const double vhat = v_[t][i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
  return true;
}

void Adam::restore(std::vector<std::vector<double>> m, std::vector<std::vector<double>> v,
                   std::int64_t step_count) {
  if (m.size() != m_.size() || v.size() != v_.size())
    throw std::invalid_argument("Adam: restore shape mismatch");
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = step_count;
}

}  // namespace warploss
