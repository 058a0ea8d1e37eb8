#include "warploss/sampler.hpp"

#include <algorithm>
#include <stdexcept>

namespace warploss {

BatchSampler::BatchSampler(const std::vector<int>& labels, int batch_size, int samples_per_class,
                           std::uint64_t seed)
    : batch_size_(batch_size), samples_per_class_(samples_per_class), rng_(seed) {
  if (samples_per_class < 1) throw std::invalid_argument("BatchSampler: samples_per_class >= 1");
  if (batch_size < 1 || batch_size % samples_per_class != 0)
    throw std::invalid_argument("BatchSampler: batch_size must be divisible by samples_per_class");
  classes_per_batch_ = batch_size / samples_per_class;

  int num_classes = 0;
  for (int y : labels) {
    if (y < 0) throw std::invalid_argument("BatchSampler: negative label");
    num_classes = std::max(num_classes, y + 1);
  }
  if (num_classes < classes_per_batch_)
    throw std::invalid_argument("BatchSampler: batch needs " +
                                std::to_string(classes_per_batch_) + " distinct classes, dataset has " +
                                std::to_string(num_classes));
  class_indices_.assign(num_classes, {});
  for (std::size_t i = 0; i < labels.size(); ++i)
    class_indices_[labels[i]].push_back(static_cast<int>(i));
  for (int c = 0; c < num_classes; ++c)
    if (class_indices_[c].empty())
      throw std::invalid_argument("BatchSampler: class " + std::to_string(c) + " has no samples");
}

std::vector<int> BatchSampler::next() {
  // Partial Fisher-Yates to pick the batch's distinct classes.
  std::vector<int> classes(class_indices_.size());
  for (std::size_t i = 0; i < classes.size(); ++i) classes[i] = static_cast<int>(i);
  for (int i = 0; i < classes_per_batch_; ++i) {
    const std::size_t j = i + rng_.uniform_index(classes.size() - i);
    std::swap(classes[i], classes[j]);
  }

  std::vector<int> batch;
  batch.reserve(batch_size_);
  for (int i = 0; i < classes_per_batch_; ++i) {
    const std::vector<int>& pool = class_indices_[classes[i]];
    if (static_cast<int>(pool.size()) >= samples_per_class_) {
      std::vector<int> copy = pool;
      for (int s = 0; s < samples_per_class_; ++s) {
        const std::size_t j = s + rng_.uniform_index(copy.size() - s);
        std::swap(copy[s], copy[j]);
        batch.push_back(copy[s]);
      }
    } else {
      for (int s = 0; s < samples_per_class_; ++s)
        batch.push_back(pool[rng_.uniform_index(pool.size())]);
    }
  }
  return batch;
}

}  // namespace warploss
