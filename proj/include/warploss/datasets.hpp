#ifndef WARPLOSS_DATASETS_HPP_
#define WARPLOSS_DATASETS_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "warploss/vec.hpp"

namespace warploss {

struct BlobSpec {
  int classes = 2;
  int per_class = 10;
  int dim = 2;
  double center_scale = 1.0;
  double noise_std = 1.0;
  std::uint64_t seed = 0;
  // When > 0, class centers are redrawn (with a derived, incremented seed)
  // until every pair is at least this far apart.
  double min_center_separation = 0.0;

  void validate() const;
};

struct Dataset {
  std::vector<Vec> features;
  std::vector<int> labels;
  std::string split;  // "train" or "test"

  std::size_t size() const { return features.size(); }
  int dim() const { return features.empty() ? 0 : static_cast<int>(features.front().size()); }
  int num_classes() const;
};

// Gaussian blobs: centers ~ N(0, center_scale^2 I), samples ~ center +
// N(0, noise_std^2 I), class-major order, deterministic by seed.
Dataset make_blobs(const BlobSpec& spec);

// Train/test pair sharing the same class centers but independent noise.
std::pair<Dataset, Dataset> make_blob_split(const BlobSpec& spec, int test_per_class);

// CSV with header "label,f0,f1,...". Malformed rows report the line number.
Dataset load_csv(const std::string& path);
void save_csv(const std::string& path, const Dataset& dataset);

// Raw IDX image/label files (big-endian, magic 0x803 / 0x801); pixels are
// scaled to [0,1] and images flattened row-major. Reads the first `limit`
// samples (0 = all).
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t limit = 0);

}  // namespace warploss

#endif  // WARPLOSS_DATASETS_HPP_
