#ifndef WARPLOSS_OPTIMIZER_HPP_
#define WARPLOSS_OPTIMIZER_HPP_

#include <cstdint>
#include <vector>

namespace warploss {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Standard Adam with bias correction over a list of parameter tensors.
class Adam {
 public:
  Adam(AdamConfig cfg, const std::vector<const std::vector<double>*>& params);

  // Applies one update. Returns false (leaving parameters untouched) if any
  // gradient entry is non-finite, so the caller can flag divergence.
  bool step(const std::vector<std::vector<double>*>& params,
            const std::vector<const std::vector<double>*>& grads, double lr_scale = 1.0);

  const AdamConfig& config() const { return cfg_; }
  std::int64_t step_count() const { return t_; }

  // Serialized state for checkpoints.
  std::vector<std::vector<double>>& moment1() { return m_; }
  std::vector<std::vector<double>>& moment2() { return v_; }
  const std::vector<std::vector<double>>& moment1() const { return m_; }
  const std::vector<std::vector<double>>& moment2() const { return v_; }
  void restore(std::vector<std::vector<double>> m, std::vector<std::vector<double>> v,
               std::int64_t step_count);

 private:
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace warploss

#endif  // WARPLOSS_OPTIMIZER_HPP_
