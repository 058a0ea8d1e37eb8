#include "warploss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "warploss/rng.hpp"

namespace warploss {

namespace {

int infer_num_classes(const LabeledBatch& batch) {
  int c = 0;
  for (int y : batch.labels) c = std::max(c, y + 1);
  return c;
}

// Indices of the other samples ordered by (distance, index).
std::vector<int> ranked_neighbors(const LabeledBatch& batch, std::size_t query) {
  const std::size_t n = batch.size();
  std::vector<double> dist(n);
  for (std::size_t j = 0; j < n; ++j)
    dist[j] = distance(batch.embeddings[query], batch.embeddings[j]);
  std::vector<int> order;
  order.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j)
    if (j != query) order.push_back(static_cast<int>(j));
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return a < b;
  });
  return order;
}

}  // namespace

std::map<int, double> recall_at_k(const LabeledBatch& batch, const std::vector<int>& ks) {
  const int c = infer_num_classes(batch);
  batch.validate(c);
  const int n = static_cast<int>(batch.size());
  if (n < 2) throw std::invalid_argument("recall_at_k: need at least 2 samples");
  int max_k = 0;
  for (int k : ks) {
    if (k < 1) throw std::invalid_argument("recall_at_k: K must be >= 1");
    if (k >= n) throw std::invalid_argument("recall_at_k: K must be < N");
    max_k = std::max(max_k, k);
  }

  std::map<int, double> hits;
  for (int k : ks) hits[k] = 0.0;
  // Production path: partial selection of the max_k nearest per query.
  for (int q = 0; q < n; ++q) {
    std::vector<double> dist(n);
    for (int j = 0; j < n; ++j) dist[j] = distance(batch.embeddings[q], batch.embeddings[j]);
    std::vector<int> order;
    order.reserve(n - 1);
    for (int j = 0; j < n; ++j)
      if (j != q) order.push_back(j);
    const auto cmp = [&](int a, int b) {
      if (dist[a] != dist[b]) return dist[a] < dist[b];
      return a < b;
    };
    std::partial_sort(order.begin(), order.begin() + max_k, order.end(), cmp);
    int first_hit = -1;
    for (int r = 0; r < max_k; ++r) {
      if (batch.labels[order[r]] == batch.labels[q]) {
        first_hit = r + 1;
        break;
      }
    }
    if (first_hit > 0)
      for (int k : ks)
        if (k >= first_hit) hits[k] += 1.0;
  }
  for (auto& [k, v] : hits) v /= n;
  return hits;
}

std::vector<std::vector<int>> brute_force_neighbors(const LabeledBatch& batch) {
  std::vector<std::vector<int>> out(batch.size());
  for (std::size_t q = 0; q < batch.size(); ++q) out[q] = ranked_neighbors(batch, q);
  return out;
}

MapAtRResult map_at_r(const LabeledBatch& batch) {
  const int c = infer_num_classes(batch);
  batch.validate(c);
  const std::size_t n = batch.size();
  std::vector<int> class_count(c, 0);
  for (int y : batch.labels) ++class_count[y];

  MapAtRResult res;
  int used = 0;
  double sum_map = 0.0, sum_rp = 0.0, sum_p1 = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    const int r = class_count[batch.labels[q]] - 1;
    if (r < 1) {
      ++res.skipped_queries;
      continue;
    }
    const std::vector<int> order = ranked_neighbors(batch, q);
    int correct = 0;
    double ap = 0.0;
    for (int i = 0; i < r; ++i) {
      const bool rel = batch.labels[order[i]] == batch.labels[q];
      if (rel) {
        ++correct;
        ap += static_cast<double>(correct) / (i + 1);
      }
    }
    sum_map += ap / r;
    sum_rp += static_cast<double>(correct) / r;
    sum_p1 += (batch.labels[order[0]] == batch.labels[q]) ? 1.0 : 0.0;
    ++used;
  }
  if (used > 0) {
    res.map_at_r = sum_map / used;
    res.rp = sum_rp / used;
    res.p_at_1 = sum_p1 / used;
  }
  return res;
}

DtpReport avg_dtp(const LabeledBatch& batch, const ProxySet& proxies) {
  const int c = proxies.num_classes();
  batch.validate(c);
  std::vector<double> sums(c, 0.0);
  std::vector<int> counts(c, 0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const int y = batch.labels[i];
    sums[y] += distance(batch.embeddings[i], proxies.proxies[y]);
    ++counts[y];
  }
  DtpReport report;
  int present = 0;
  for (int y = 0; y < c; ++y) {
    if (counts[y] == 0) continue;  // absent classes are excluded, not zero
    const double mean = sums[y] / counts[y];
    report.per_class_dtp[y] = mean;
    report.avg_dtp += mean;
    ++present;
  }
  if (present > 0) report.avg_dtp /= present;
  return report;
}

double nmi_of_partitions(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("nmi_of_partitions: size mismatch");
  const double n = static_cast<double>(a.size());
  int ka = 1 + *std::max_element(a.begin(), a.end());
  int kb = 1 + *std::max_element(b.begin(), b.end());
  std::vector<double> ca(ka, 0.0), cb(kb, 0.0);
  std::vector<std::vector<double>> joint(ka, std::vector<double>(kb, 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    joint[a[i]][b[i]] += 1.0;
  }
  double mi = 0.0, ha = 0.0, hb = 0.0;
  for (int i = 0; i < ka; ++i)
    if (ca[i] > 0) ha -= (ca[i] / n) * std::log(ca[i] / n);
  for (int j = 0; j < kb; ++j)
    if (cb[j] > 0) hb -= (cb[j] / n) * std::log(cb[j] / n);
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j)
      if (joint[i][j] > 0)
        mi += (joint[i][j] / n) * std::log(n * joint[i][j] / (ca[i] * cb[j]));
  if (ha + hb <= 0.0) return 0.0;
  return 2.0 * mi / (ha + hb);
}

std::vector<int> kmeans_assign(const std::vector<Vec>& points, int k, std::uint64_t seed,
                               int restarts, int max_iters) {
  const int n = static_cast<int>(points.size());
  if (k < 1 || n < k) throw std::invalid_argument("kmeans_assign: need k in [1, N]");
  const std::size_t dim = points.front().size();
  Rng rng(seed);

  std::vector<int> best_assign(n, 0);
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < restarts; ++restart) {
    // k-means++ seeding.
    std::vector<Vec> centers;
    centers.reserve(k);
    centers.push_back(points[rng.uniform_index(n)]);
    std::vector<double> d2(n);
    for (int c = 1; c < k; ++c) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec& ctr : centers) {
          const double d = distance(points[i], ctr);
          best = std::min(best, d * d);
        }
        d2[i] = best;
        total += best;
      }
      if (total <= 0.0) {
        centers.push_back(points[rng.uniform_index(n)]);
        continue;
      }
      double target = rng.uniform() * total;
      int pick = n - 1;
      for (int i = 0; i < n; ++i) {
        target -= d2[i];
        if (target <= 0.0) {
          pick = i;
          break;
        }
      }
      centers.push_back(points[pick]);
    }

    std::vector<int> assign(n, -1);
    for (int iter = 0; iter < max_iters; ++iter) {
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        int best_c = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
          const double d = distance(points[i], centers[c]);
          if (d < best_d) {
            best_d = d;
            best_c = c;
          }
        }
        if (assign[i] != best_c) {
          assign[i] = best_c;
          changed = true;
        }
      }
      if (!changed && iter > 0) break;
      std::vector<Vec> sums(k, Vec(dim, 0.0));
      std::vector<int> counts(k, 0);
      for (int i = 0; i < n; ++i) {
        axpy(1.0, points[i], sums[assign[i]]);
        ++counts[assign[i]];
      }
      for (int c = 0; c < k; ++c) {
        if (counts[c] == 0) {
          // Re-seed an empty cluster on the point farthest from its center.
          int far = 0;
          double far_d = -1.0;
          for (int i = 0; i < n; ++i) {
            const double d = distance(points[i], centers[assign[i]]);
            if (d > far_d) {
              far_d = d;
              far = i;
            }
          }
          centers[c] = points[far];
        } else {
          for (std::size_t t = 0; t < dim; ++t) centers[c][t] = sums[c][t] / counts[c];
        }
      }
    }

    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = distance(points[i], centers[assign[i]]);
      inertia += d * d;
    }
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_assign = assign;
    }
  }
  return best_assign;
}

RetrievalResult evaluate_retrieval(const LabeledBatch& batch, const std::vector<int>& ks,
                                   std::uint64_t kmeans_seed) {
  RetrievalResult out;
  out.recall_at = recall_at_k(batch, ks);
  out.nmi = nmi(batch, kmeans_seed).value;
  const MapAtRResult m = map_at_r(batch);
  out.map_at_r = m.map_at_r;
  out.rp = m.rp;
  out.p_at_1 = m.p_at_1;
  return out;
}

NmiResult nmi(const LabeledBatch& batch, std::uint64_t kmeans_seed) {
  const int c = infer_num_classes(batch);
  batch.validate(c);
  if (c < 2) throw std::invalid_argument("nmi: need at least 2 classes");

  NmiResult res;
  bool all_identical = true;
  for (std::size_t i = 1; i < batch.size() && all_identical; ++i)
    all_identical = batch.embeddings[i] == batch.embeddings.front();
  if (all_identical) {
    res.degenerate = true;
    res.value = 0.0;
    return res;
  }
  const std::vector<int> clusters = kmeans_assign(batch.embeddings, c, kmeans_seed);
  res.value = nmi_of_partitions(batch.labels, clusters);
  return res;
}

}  // namespace warploss
