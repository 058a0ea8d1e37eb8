#ifndef WARPLOSS_TRAINER_HPP_
#define WARPLOSS_TRAINER_HPP_

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "warploss/embedder.hpp"
#include "warploss/loss.hpp"
#include "warploss/optimizer.hpp"

namespace warploss {

struct PhaseConfig {
  int steps = 0;
  LossConfig loss;
  double lr_multiplier = 1.0;
};

struct TrainConfig {
  std::uint64_t seed = 0;
  int batch_size = 32;
  int samples_per_class = 4;
  double lr_model = 1e-2;
  double lr_proxies = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  PhaseConfig phase1;
  PhaseConfig phase2;
  // Training is flagged diverged when a non-finite loss or gradient shows
  // up, or when the per-epoch AvgDTP exceeds this bound (embeddings running
  // away outward). Infinity disables the bound.
  double divergence_dtp_threshold = std::numeric_limits<double>::infinity();

  void validate() const;
};

struct AdamDump {
  std::vector<std::vector<double>> m, v;
  std::int64_t step_count = 0;
};

struct TrainTrace {
  std::vector<double> step_losses;
  // (steps completed, AvgDTP on the training set). The first entry is the
  // pre-training state; one entry follows per completed epoch.
  std::vector<std::pair<int, double>> epoch_dtp;
  EmbedderParams params;
  ProxySet proxies;
  AdamDump adam_model;
  AdamDump adam_proxies;
  std::array<std::uint64_t, 4> batch_rng_state{};
  std::uint64_t seed = 0;
  bool diverged = false;
  int divergence_step = -1;
  std::string divergence_reason;
  // Recorded phase schedule: the loss config in effect at step s is
  // phase1_loss for s < phase1_steps and phase2_loss after.
  int phase1_steps = 0;
  LossConfig phase1_loss;
  LossConfig phase2_loss;
};

// i.i.d. standard normal proxies, deterministic given seed.
ProxySet init_proxies(int num_classes, int dim, std::uint64_t seed);

// Two-phase training of the embedder and proxies with Adam and
// class-balanced batches. Fully reproducible from cfg.seed.
TrainTrace train(const std::vector<Vec>& data, const std::vector<int>& labels,
                 const EmbedderSpec& spec, const TrainConfig& cfg);

struct Checkpoint {
  int version = 1;
  EmbedderSpec spec;
  EmbedderParams params;
  ProxySet proxies;
  AdamDump adam_model;
  AdamDump adam_proxies;
  std::array<std::uint64_t, 4> batch_rng_state{};
  std::uint64_t seed = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace warploss

#endif  // WARPLOSS_TRAINER_HPP_
