#ifndef WARPLOSS_METRICS_HPP_
#define WARPLOSS_METRICS_HPP_

#include <cstdint>
#include <map>
#include <vector>

#include "warploss/loss.hpp"

namespace warploss {

struct RetrievalResult {
  std::map<int, double> recall_at;
  double nmi = 0.0;
  double map_at_r = 0.0;
  double rp = 0.0;
  double p_at_1 = 0.0;
};

struct MapAtRResult {
  double map_at_r = 0.0;
  double rp = 0.0;
  double p_at_1 = 0.0;
  int skipped_queries = 0;  // queries whose class has a single sample
};

struct NmiResult {
  double value = 0.0;
  bool degenerate = false;  // all points identical
};

struct DtpReport {
  double avg_dtp = 0.0;
  std::map<int, double> per_class_dtp;
};

// For each query: self excluded, 1 if any of the K nearest shares its label,
// averaged over queries. Distance ties break to the lower index. K >= N
// throws.
std::map<int, double> recall_at_k(const LabeledBatch& batch, const std::vector<int>& ks);

// All retrieval metrics in one result.
RetrievalResult evaluate_retrieval(const LabeledBatch& batch, const std::vector<int>& ks,
                                   std::uint64_t kmeans_seed);

// k-means (k = number of classes, k-means++ seeding, 20 restarts, best
// inertia) followed by NMI(labels, clusters) with arithmetic-mean
// normalization 2I/(H_labels + H_clusters).
NmiResult nmi(const LabeledBatch& batch, std::uint64_t kmeans_seed);

// MAP@R, R-precision and precision@1 per query with R = same-class count
// minus one; averaged over queries with R >= 1.
MapAtRResult map_at_r(const LabeledBatch& batch);

// Per-class mean distance to the class proxy, then the unweighted mean over
// classes present in the batch.
DtpReport avg_dtp(const LabeledBatch& batch, const ProxySet& proxies);

// Exact O(N^2) neighbor ranking per query, self excluded, ties by index.
// This is the test oracle for the retrieval metrics.
std::vector<std::vector<int>> brute_force_neighbors(const LabeledBatch& batch);

// NMI between two hard partitions (exposed for tests).
double nmi_of_partitions(const std::vector<int>& a, const std::vector<int>& b);

// k-means assignments for the batch (exposed for tests / diagnostics).
std::vector<int> kmeans_assign(const std::vector<Vec>& points, int k, std::uint64_t seed,
                               int restarts = 20, int max_iters = 100);

}  // namespace warploss

#endif  // WARPLOSS_METRICS_HPP_
