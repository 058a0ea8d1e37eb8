#include "warploss/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "warploss/geometry.hpp"
#include "warploss/rng.hpp"

namespace warploss {

namespace {

std::vector<Vec> draw_centers(const BlobSpec& spec) {
  std::uint64_t seed = derive_seed(spec.seed, RngStream::kBlobCenters);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Rng rng(seed + static_cast<std::uint64_t>(attempt));
    std::vector<Vec> centers(spec.classes, Vec(spec.dim));
    for (auto& c : centers)
      for (double& v : c) v = rng.gaussian(0.0, spec.center_scale);
    if (spec.min_center_separation <= 0.0) return centers;
    double min_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < spec.classes; ++i)
      for (int j = i + 1; j < spec.classes; ++j)
        min_d = std::min(min_d, distance(centers[i], centers[j]));
    if (min_d >= spec.min_center_separation) return centers;
  }
  throw std::runtime_error("make_blobs: could not satisfy min_center_separation");
}

Dataset sample_around(const std::vector<Vec>& centers, const BlobSpec& spec, int per_class,
                      std::uint64_t noise_seed, const std::string& split) {
  Rng rng(noise_seed);
  Dataset ds;
  ds.split = split;
  ds.features.reserve(static_cast<std::size_t>(spec.classes) * per_class);
  for (int c = 0; c < spec.classes; ++c) {
    for (int s = 0; s < per_class; ++s) {
      Vec x = centers[c];
      for (double& v : x) v += rng.gaussian(0.0, spec.noise_std);
      ds.features.push_back(std::move(x));
      ds.labels.push_back(c);
    }
  }
  return ds;
}

std::uint32_t read_be_u32(std::istream& in, const std::string& field) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("load_idx: truncated file while reading " + field);
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace

void BlobSpec::validate() const {
  if (classes < 2) throw std::invalid_argument("BlobSpec: classes must be >= 2");
  if (per_class < 1) throw std::invalid_argument("BlobSpec: per_class must be >= 1");
  if (dim < 1) throw std::invalid_argument("BlobSpec: dim must be >= 1");
  if (!(center_scale > 0.0)) throw std::invalid_argument("BlobSpec: center_scale must be > 0");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("BlobSpec: noise_std must be >= 0");
}

int Dataset::num_classes() const {
  int c = 0;
  for (int y : labels) c = std::max(c, y + 1);
  return c;
}

Dataset make_blobs(const BlobSpec& spec) {
  spec.validate();
  const std::vector<Vec> centers = draw_centers(spec);
  return sample_around(centers, spec, spec.per_class,
                       derive_seed(spec.seed, RngStream::kBlobTrainNoise), "train");
}

std::pair<Dataset, Dataset> make_blob_split(const BlobSpec& spec, int test_per_class) {
  spec.validate();
  if (test_per_class < 1) throw std::invalid_argument("make_blob_split: test_per_class >= 1");
  const std::vector<Vec> centers = draw_centers(spec);
  Dataset train = sample_around(centers, spec, spec.per_class,
                                derive_seed(spec.seed, RngStream::kBlobTrainNoise), "train");
  Dataset test = sample_around(centers, spec, test_per_class,
                               derive_seed(spec.seed, RngStream::kBlobTestNoise), "test");
  return {std::move(train), std::move(test)};
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("load_csv: empty file " + path);
  if (header.rfind("label", 0) != 0)
    throw std::runtime_error("load_csv: header must start with 'label', got '" + header + "'");

  Dataset ds;
  ds.split = "train";
  std::string line;
  std::size_t line_no = 1;
  std::size_t expected_cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(row, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                                 ": malformed value '" + cell + "'");
      }
    }
    if (values.size() < 2)
      throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                               ": need a label and at least one feature");
    if (expected_cols == 0) expected_cols = values.size();
    if (values.size() != expected_cols)
      throw std::runtime_error("load_csv: line " + std::to_string(line_no) + ": expected " +
                               std::to_string(expected_cols) + " columns, got " +
                               std::to_string(values.size()));
    const double label = values.front();
    if (label < 0 || label != std::floor(label))
      throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                               ": label must be a non-negative integer");
    ds.labels.push_back(static_cast<int>(label));
    ds.features.emplace_back(values.begin() + 1, values.end());
  }
  if (ds.features.empty()) throw std::runtime_error("load_csv: no data rows in " + path);
  return ds;
}

void save_csv(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_csv: cannot open " + path);
  out << "label";
  for (int k = 0; k < dataset.dim(); ++k) out << ",f" << k;
  out << "\n";
  char buf[40];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out << dataset.labels[i];
    for (double v : dataset.features[i]) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      out << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("save_csv: write failed for " + path);
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t limit) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("load_idx: cannot open images file " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("load_idx: cannot open labels file " + labels_path);

  const std::uint32_t img_magic = read_be_u32(img, "images magic");
  if (img_magic != 0x00000803u)
    throw std::runtime_error("load_idx: bad images magic (expected 0x00000803)");
  const std::uint32_t img_count = read_be_u32(img, "images count");
  const std::uint32_t rows = read_be_u32(img, "images rows");
  const std::uint32_t cols = read_be_u32(img, "images cols");

  const std::uint32_t lab_magic = read_be_u32(lab, "labels magic");
  if (lab_magic != 0x00000801u)
    throw std::runtime_error("load_idx: bad labels magic (expected 0x00000801)");
  const std::uint32_t lab_count = read_be_u32(lab, "labels count");
  if (img_count != lab_count)
    throw std::runtime_error("load_idx: images count " + std::to_string(img_count) +
                             " != labels count " + std::to_string(lab_count));

  std::size_t n = img_count;
  if (limit > 0) n = std::min<std::size_t>(n, limit);
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;

  Dataset ds;
  ds.split = "train";
  ds.features.reserve(n);
  ds.labels.reserve(n);
  std::vector<unsigned char> buf(pixels);
  for (std::size_t i = 0; i < n; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
    if (!img) throw std::runtime_error("load_idx: truncated images data at sample " +
                                       std::to_string(i));
    Vec x(pixels);
    for (std::size_t p = 0; p < pixels; ++p) x[p] = static_cast<double>(buf[p]) / 255.0;
    ds.features.push_back(std::move(x));
    char yb = 0;
    lab.read(&yb, 1);
    if (!lab) throw std::runtime_error("load_idx: truncated labels data at sample " +
                                       std::to_string(i));
    ds.labels.push_back(static_cast<int>(static_cast<unsigned char>(yb)));
  }
  return ds;
}

}  // namespace warploss
