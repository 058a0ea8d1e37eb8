#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "warploss/metrics.hpp"
#include "warploss/rng.hpp"

using namespace warploss;

namespace {

LabeledBatch random_batch(Rng& rng, int max_n = 200) {
  const int c = 2 + static_cast<int>(rng.uniform_index(5));
  const int dim = 2 + static_cast<int>(rng.uniform_index(4));
  const int n = std::max(2 * c, static_cast<int>(rng.uniform_index(max_n - 2 * c)) + 2 * c);
  LabeledBatch batch;
  batch.embeddings.assign(n, Vec(dim));
  batch.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    // Two guaranteed samples per class, rest random.
    batch.labels[i] = i < 2 * c ? i % c : static_cast<int>(rng.uniform_index(c));
    for (double& v : batch.embeddings[i]) v = rng.gaussian(0.0, 2.0);
  }
  return batch;
}

}  // namespace

TEST_CASE("recall basics") {
  SUBCASE("two well-separated clusters") {
    LabeledBatch batch;
    batch.embeddings = {Vec{0, 0}, Vec{0.1, 0}, Vec{10, 0}, Vec{10.1, 0}};
    batch.labels = {0, 0, 1, 1};
    CHECK(recall_at_k(batch, {1}).at(1) == 1.0);
  }
  SUBCASE("collinear alternating points fail at K = 1") {
    LabeledBatch batch;
    batch.embeddings = {Vec{0.0}, Vec{1.0}, Vec{2.0}};
    batch.labels = {0, 1, 0};
    CHECK(recall_at_k(batch, {1}).at(1) == 0.0);
  }
  SUBCASE("K = N-1 is exhaustive") {
    Rng rng(1);
    LabeledBatch batch = random_batch(rng, 40);
    const int n = static_cast<int>(batch.size());
    CHECK(recall_at_k(batch, {n - 1}).at(n - 1) == 1.0);
  }
  SUBCASE("K >= N throws") {
    LabeledBatch batch;
    batch.embeddings = {Vec{0.0}, Vec{1.0}};
    batch.labels = {0, 0};
    CHECK_THROWS_AS(recall_at_k(batch, {2}), std::invalid_argument);
  }
}

TEST_CASE("recall is monotone in K") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const LabeledBatch batch = random_batch(rng, 60);
    const auto r = recall_at_k(batch, {1, 2, 4, 8});
    CHECK(r.at(1) <= r.at(2));
    CHECK(r.at(2) <= r.at(4));
    CHECK(r.at(4) <= r.at(8));
  }
}

TEST_CASE("brute force oracle equivalence on random batches") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const LabeledBatch batch = random_batch(rng);

    // Library path.
    const auto recall = recall_at_k(batch, {1, 2, 4});
    const MapAtRResult m = map_at_r(batch);

    // Oracle path: independent neighbor ranking + metric definitions.
    const auto neighbors = oracles::reference_neighbors(batch.embeddings);
    for (int k : {1, 2, 4})
      CHECK(recall.at(k) == oracles::reference_recall_at_k(neighbors, batch.labels, k));
    const auto ref = oracles::reference_map_at_r(neighbors, batch.labels);
    CHECK(m.map_at_r == ref.map_at_r);
    CHECK(m.rp == ref.rp);
    CHECK(m.p_at_1 == ref.p_at_1);
    CHECK(m.skipped_queries == ref.skipped);
    // Per query each precision summand is <= 1, so MAP@R <= RP <= 1.
    CHECK(m.map_at_r <= m.rp + 1e-12);
    CHECK(m.rp <= 1.0);

    // The library's own brute-force neighbor lists agree with the oracle.
    const auto lib_neighbors = brute_force_neighbors(batch);
    CHECK(lib_neighbors == neighbors);
  }
}

TEST_CASE("map@r hand-constructed rank patterns") {
  // Each geometry makes every scored query see the same rank pattern with
  // R = 2, so the averages equal the per-query values exactly. Interloper
  // classes are singletons and only show up in the skipped tally.
  SUBCASE("top-R all correct: MAP@R = RP = P@1 = 1") {
    LabeledBatch batch;
    batch.embeddings = {Vec{0}, Vec{1}, Vec{2}, Vec{50}};
    batch.labels = {0, 0, 0, 1};
    const MapAtRResult m = map_at_r(batch);
    CHECK(m.map_at_r == 1.0);
    CHECK(m.rp == 1.0);
    CHECK(m.p_at_1 == 1.0);
    CHECK(m.skipped_queries == 1);
  }
  SUBCASE("correct at ranks 1 and 3: MAP@R = 0.5, RP = 0.5, P@1 = 1") {
    // Three class-0 points on a line; per query, one singleton interloper
    // sits strictly between its two same-class neighbors in distance.
    LabeledBatch batch;
    batch.embeddings = {Vec{0, 0}, Vec{1, 0}, Vec{10, 0}, Vec{0, 2}, Vec{10, 9.5}};
    batch.labels = {0, 0, 0, 1, 2};
    const MapAtRResult m = map_at_r(batch);
    CHECK(m.map_at_r == 0.5);
    CHECK(m.rp == 0.5);
    CHECK(m.p_at_1 == 1.0);
    CHECK(m.skipped_queries == 2);
  }
  SUBCASE("correct at ranks 2 and 3: MAP@R = 0.25, RP = 0.5, P@1 = 0") {
    // Equilateral class-0 triangle with a singleton interloper at the
    // center: the center is every vertex's nearest neighbor.
    const double s3 = std::sqrt(3.0);
    LabeledBatch batch;
    batch.embeddings = {Vec{0, 0}, Vec{2, 0}, Vec{1, s3}, Vec{1, 1.0 / s3}};
    batch.labels = {0, 0, 0, 1};
    const MapAtRResult m = map_at_r(batch);
    CHECK(m.map_at_r == 0.25);
    CHECK(m.rp == 0.5);
    CHECK(m.p_at_1 == 0.0);
    CHECK(m.skipped_queries == 1);
  }
}

TEST_CASE("nmi properties") {
  SUBCASE("perfect clustering") {
    LabeledBatch batch;
    Rng rng(4);
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 20; ++i) {
        batch.embeddings.push_back(Vec{c * 50.0 + rng.uniform(-0.5, 0.5),
                                       c * 30.0 + rng.uniform(-0.5, 0.5)});
        batch.labels.push_back(c);
      }
    const NmiResult r = nmi(batch, 11);
    CHECK_FALSE(r.degenerate);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("identical points are degenerate") {
    LabeledBatch batch;
    batch.embeddings.assign(10, Vec{1.0, 2.0});
    for (int i = 0; i < 10; ++i) batch.labels.push_back(i % 2);
    const NmiResult r = nmi(batch, 5);
    CHECK(r.degenerate);
    CHECK(r.value == 0.0);
  }
  SUBCASE("random labels on clusterable points stay near zero") {
    LabeledBatch batch;
    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
      const int blob = i % 2;
      batch.embeddings.push_back(
          Vec{blob * 40.0 + rng.gaussian(), blob * 10.0 + rng.gaussian()});
      batch.labels.push_back(static_cast<int>(rng.uniform_index(2)));
    }
    const NmiResult r = nmi(batch, 13);
    CHECK(r.value <= 0.2);
  }
  SUBCASE("single swap breaks perfection") {
    std::vector<int> a(100), b(100);
    for (int i = 0; i < 100; ++i) a[i] = b[i] = i / 50;
    CHECK(nmi_of_partitions(a, b) == doctest::Approx(1.0));
    std::swap(b[0], b[99]);
    CHECK(nmi_of_partitions(a, b) < 1.0);
  }
  SUBCASE("invariant under relabeling") {
    Rng rng(8);
    std::vector<int> a(120), b(120);
    for (int i = 0; i < 120; ++i) {
      a[i] = static_cast<int>(rng.uniform_index(4));
      b[i] = static_cast<int>(rng.uniform_index(3));
    }
    const double base = nmi_of_partitions(a, b);
    CHECK(base >= 0.0);
    CHECK(base <= 1.0);
    std::vector<int> a_relabeled(120);
    const int perm[4] = {2, 3, 1, 0};
    for (int i = 0; i < 120; ++i) a_relabeled[i] = perm[a[i]];
    CHECK(nmi_of_partitions(a_relabeled, b) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("avg dtp") {
  SUBCASE("single class mean") {
    LabeledBatch batch;
    batch.embeddings = {Vec{1, 0}, Vec{3, 0}};
    batch.labels = {0, 0};
    ProxySet proxies{{Vec{0, 0}, Vec{100, 100}}};
    const DtpReport r = avg_dtp(batch, proxies);
    CHECK(r.avg_dtp == doctest::Approx(2.0));
    CHECK(r.per_class_dtp.at(0) == doctest::Approx(2.0));
    CHECK(r.per_class_dtp.count(1) == 0);  // absent class excluded
  }
  SUBCASE("embeddings on their proxies") {
    LabeledBatch batch;
    batch.embeddings = {Vec{0, 0}, Vec{5, 5}};
    batch.labels = {0, 1};
    ProxySet proxies{{Vec{0, 0}, Vec{5, 5}}};
    CHECK(avg_dtp(batch, proxies).avg_dtp == 0.0);
  }
  SUBCASE("outer mean is unweighted by class size") {
    LabeledBatch batch;
    batch.embeddings = {Vec{2, 0}, Vec{2, 0}, Vec{2, 0}, Vec{5, 4}};
    batch.labels = {0, 0, 0, 1};
    ProxySet proxies{{Vec{0, 0}, Vec{5, 0}}};
    CHECK(avg_dtp(batch, proxies).avg_dtp == doctest::Approx(3.0));
  }
  SUBCASE("translation invariant, scales linearly") {
    Rng rng(9);
    LabeledBatch batch = random_batch(rng, 50);
    const int c = 1 + *std::max_element(batch.labels.begin(), batch.labels.end());
    ProxySet proxies;
    proxies.proxies.assign(c, Vec(batch.embeddings.front().size()));
    for (auto& p : proxies.proxies)
      for (double& v : p) v = rng.gaussian();
    const double base = avg_dtp(batch, proxies).avg_dtp;

    LabeledBatch shifted = batch;
    ProxySet shifted_proxies = proxies;
    Vec offset(batch.embeddings.front().size());
    for (double& v : offset) v = rng.uniform(-5, 5);
    for (auto& e : shifted.embeddings) e = add(e, offset);
    for (auto& p : shifted_proxies.proxies) p = add(p, offset);
    CHECK(avg_dtp(shifted, shifted_proxies).avg_dtp == doctest::Approx(base).epsilon(1e-9));

    LabeledBatch grown = batch;
    ProxySet grown_proxies = proxies;
    for (auto& e : grown.embeddings) e = scaled(e, 3.5);
    for (auto& p : grown_proxies.proxies) p = scaled(p, 3.5);
    CHECK(avg_dtp(grown, grown_proxies).avg_dtp == doctest::Approx(3.5 * base).epsilon(1e-9));
  }
}

TEST_CASE("brute force neighbor edge cases") {
  LabeledBatch one;
  one.embeddings = {Vec{0, 0}};
  one.labels = {0};
  CHECK(brute_force_neighbors(one)[0].empty());

  LabeledBatch two;
  two.embeddings = {Vec{0, 0}, Vec{1, 1}};
  two.labels = {0, 1};
  const auto n = brute_force_neighbors(two);
  CHECK(n[0] == std::vector<int>{1});
  CHECK(n[1] == std::vector<int>{0});
}
