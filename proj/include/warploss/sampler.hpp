#ifndef WARPLOSS_SAMPLER_HPP_
#define WARPLOSS_SAMPLER_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "warploss/rng.hpp"

namespace warploss {

// Class-balanced batch stream: every batch holds batch_size/samples_per_class
// distinct classes with samples_per_class indices each. Classes smaller than
// samples_per_class are sampled with replacement. Deterministic given seed.
class BatchSampler {
 public:
  BatchSampler(const std::vector<int>& labels, int batch_size, int samples_per_class,
               std::uint64_t seed);

  std::vector<int> next();

  int classes_per_batch() const { return classes_per_batch_; }
  int num_classes() const { return static_cast<int>(class_indices_.size()); }
  std::array<std::uint64_t, 4> rng_state() const { return rng_.state(); }

 private:
  std::vector<std::vector<int>> class_indices_;
  int batch_size_;
  int samples_per_class_;
  int classes_per_batch_;
  Rng rng_;
};

}  // namespace warploss

#endif  // WARPLOSS_SAMPLER_HPP_
