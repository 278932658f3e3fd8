#include <doctest.h>

#include <random>

#include "clustermodel.hpp"
#include "error.hpp"
#include "helpers.hpp"

using namespace votetrace;

namespace {

std::vector<ActivityBurst> two_populations() {
  std::vector<ActivityBurst> out;
  for (int i = 0; i < 100; ++i) {
    const std::string v = "v" + std::to_string(i);
    out.push_back(testing::burst(v, 0, 0.0, {0, 0.1}, {500}));                     // (1000, 500, 2)
    out.push_back(testing::burst(v, 1, 10.0, {0, 0.1, 0.2, 0.3, 0.4}, {1000}));  // (5000, 1000, 5)
  }
  return out;
}

std::vector<const ActivityBurst*> pointers(const std::vector<ActivityBurst>& bs) {
  std::vector<const ActivityBurst*> p;
  for (const auto& b : bs) p.push_back(&b);
  return p;
}

}  // namespace

TEST_SUITE("cluster") {

TEST_CASE("two separated populations form two clusters without noise") {
  const auto bursts = two_populations();
  const auto ptrs = pointers(bursts);
  const auto lab = cluster_bursts(ptrs, ClusterOptions{});
  CHECK(lab.cluster_count == 2);
  for (const auto& e : lab.entries) CHECK(e.cluster_id != kNoise);
  for (std::size_t i = 0; i < bursts.size(); ++i)
    CHECK(lab.entries[i].cluster_id == lab.entries[i % 2].cluster_id);

  // Pairwise check on the standardized features: every inter-group distance
  // exceeds eps, every intra-group distance is within it.
  double intra = 0, inter = 1e300;
  for (std::size_t i = 0; i < lab.features.size(); ++i)
    for (std::size_t j = i + 1; j < lab.features.size(); ++j) {
      const double d = euclidean(lab.features[i], lab.features[j]);
      if (i % 2 == j % 2) intra = std::max(intra, d);
      else inter = std::min(inter, d);
    }
  CHECK(intra <= lab.eps);
  CHECK(inter > lab.eps);
  CHECK(inter > 100 * (intra + 1e-12));

  const auto q = cluster_quality(lab);
  REQUIRE(q.silhouette.has_value());
  CHECK(*q.silhouette > 0.9);
  CHECK(q.noise_ratio == 0.0);
}

TEST_CASE("single burst with min_pts 1 is a singleton cluster") {
  const std::vector<ActivityBurst> bs = {testing::burst("v", 0, 0.0, {0, 1}, {10, 20})};
  ClusterOptions o;
  o.min_pts = 1;
  const auto lab = cluster_bursts(pointers(bs), o);
  CHECK(lab.cluster_count == 1);
  CHECK(lab.entries[0].cluster_id == 0);
  CHECK_FALSE(cluster_quality(lab).silhouette.has_value());
}

TEST_CASE("identical bursts: one cluster and zero-variance warnings") {
  std::vector<ActivityBurst> bs;
  for (int i = 0; i < 10; ++i) bs.push_back(testing::burst("v" + std::to_string(i), 0, 0.0, {0, 1}, {10, 20}));
  const auto lab = cluster_bursts(pointers(bs), ClusterOptions{});
  CHECK(lab.cluster_count == 1);
  CHECK(lab.warnings.size() == 3);
  CHECK_FALSE(cluster_quality(lab).silhouette.has_value());
}

TEST_CASE("too few bursts for min_pts") {
  const std::vector<ActivityBurst> bs = {testing::burst("v", 0, 0.0, {0, 1}, {10})};
  CHECK_THROWS_AS(cluster_bursts(pointers(bs), ClusterOptions{}), Error);
}

TEST_CASE("affine rescaling of payload units leaves the labeling unchanged") {
  std::mt19937_64 rng(12);
  std::vector<ActivityBurst> bs, scaled;
  for (int i = 0; i < 150; ++i) {
    const int kind = i % 3;
    std::vector<std::int64_t> lens;
    const std::size_t count = static_cast<std::size_t>(2 + kind * 2);
    for (std::size_t k = 0; k < count; ++k) lens.push_back(300 + 400 * kind + static_cast<std::int64_t>(rng() % 20));
    std::vector<double> off;
    for (std::size_t k = 0; k < count; ++k) off.push_back(0.1 * static_cast<double>(k));
    bs.push_back(testing::burst("v" + std::to_string(i), 0, 0.0, off, lens));
    for (auto& l : lens) l *= 7;
    scaled.push_back(testing::burst("v" + std::to_string(i), 0, 0.0, off, lens));
  }
  ClusterOptions o;
  o.eps = 0.5;
  const auto a = cluster_bursts(pointers(bs), o);
  const auto b = cluster_bursts(pointers(scaled), o);
  CHECK(a.cluster_count == 3);
  for (std::size_t i = 0; i < a.entries.size(); ++i) CHECK(a.entries[i].cluster_id == b.entries[i].cluster_id);
}

TEST_CASE("clustering is deterministic") {
  const auto bursts = two_populations();
  const auto a = cluster_bursts(pointers(bursts), ClusterOptions{});
  const auto b = cluster_bursts(pointers(bursts), ClusterOptions{});
  CHECK(write_labeling_csv(a) == write_labeling_csv(b));
}

TEST_CASE("anchoring by plurality") {
  std::vector<ActivityBurst> bs;
  for (int i = 0; i < 10; ++i) bs.push_back(testing::burst("v" + std::to_string(i), 0, 0.0, {0, 1}, {10, 20}));
  for (int i = 0; i < 10; ++i) bs.push_back(testing::burst("w" + std::to_string(i), 0, 0.0, {0, 1, 2, 3}, {900}));
  auto lab = cluster_bursts(pointers(bs), ClusterOptions{});
  REQUIRE(lab.cluster_count == 2);

  std::vector<ActionAssignment> as;
  for (int i = 0; i < 10; ++i) as.push_back({"v" + std::to_string(i), 0, i < 6 ? 3 : 7, RuleFired::exact});
  for (int i = 0; i < 10; ++i) as.push_back({"w" + std::to_string(i), 0, kUnknownAction, RuleFired::none});
  anchor_clusters(lab, as);
  const auto* v = lab.find("v0", 0);
  const auto* w = lab.find("w0", 0);
  REQUIRE(v);
  REQUIRE(w);
  CHECK(v->action_id == 3);
  CHECK(v->purity == doctest::Approx(0.6));
  CHECK(w->action_id == kUnknownAction);

  std::vector<ActionAssignment> all3;
  for (int i = 0; i < 10; ++i) all3.push_back({"v" + std::to_string(i), 0, 3, RuleFired::exact});
  anchor_clusters(lab, all3);
  CHECK(lab.find("v5", 0)->action_id == 3);
  CHECK(lab.find("v5", 0)->purity == 1.0);
}

TEST_CASE("dbscan on a line") {
  const std::vector<double> xs = {0, 0.5, 1.0, 5, 5.2, 20};
  const auto labels = dbscan_sorted_1d(xs, 0.6, 2);
  CHECK(labels == std::vector<int>{0, 0, 0, 1, 1, kNoise});
  const std::vector<double> curve = {0, 0.01, 0.02, 0.03, 1.0, 2.0};
  const double knee = knee_value(curve);
  CHECK(knee >= 0.03);
  CHECK(knee <= 1.0);
}

}
