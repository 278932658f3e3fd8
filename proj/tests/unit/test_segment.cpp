#include <doctest.h>

#include <algorithm>
#include <random>

#include "error.hpp"
#include "helpers.hpp"
#include "segment.hpp"

using namespace votetrace;
using testing::flow_at;

namespace {

// Largest ratio jump between sorted positive IATs, scanned exhaustively.
std::pair<double, double> widest_jump(std::vector<double> iats) {
  std::sort(iats.begin(), iats.end());
  std::pair<double, double> best{0, 0};
  double ratio = 1.0;
  for (std::size_t i = 0; i + 1 < iats.size(); ++i)
    if (iats[i + 1] / iats[i] > ratio) {
      ratio = iats[i + 1] / iats[i];
      best = {iats[i], iats[i + 1]};
    }
  return best;
}

VoterFlow flow_from_iats(const std::vector<double>& iats) {
  std::vector<double> ts = {0.0};
  for (double d : iats) ts.push_back(ts.back() + d);
  return flow_at("v", ts);
}

}  // namespace

TEST_SUITE("segment") {

TEST_CASE("two triplets") {
  const auto seg = segment_voter(flow_at("v", {0.0, 0.1, 0.2, 100.0, 100.1, 100.2}), 1.0, 2);
  REQUIRE(seg.bursts.size() == 2);
  CHECK(seg.noise.empty());
  CHECK(seg.bursts[0].packet_count == 3);
  CHECK(seg.bursts[1].packet_count == 3);
  CHECK(seg.bursts[1].start_ts == 100.0);
  const auto q = segmentation_quality(seg.bursts, seg.noise);
  REQUIRE(q.silhouette.has_value());
  CHECK(*q.silhouette > 0.9);
  CHECK(q.noise_ratio == 0.0);
}

TEST_CASE("single record with min_pts 1") {
  const auto seg = segment_voter(flow_at("v", {4.0}), 1.0, 1);
  REQUIRE(seg.bursts.size() == 1);
  CHECK(seg.bursts[0].start_ts == 4.0);
  CHECK(seg.bursts[0].end_ts == 4.0);
}

TEST_CASE("isolated points are all noise") {
  const auto seg = segment_voter(flow_at("v", {0, 50, 100}), 1.0, 2);
  CHECK(seg.bursts.empty());
  CHECK(seg.noise.size() == 3);
  CHECK(segmentation_quality(seg.bursts, seg.noise).noise_ratio == 1.0);
}

TEST_CASE("one cluster leaves silhouette undefined") {
  const auto seg = segment_voter(flow_at("v", {0, 0.1, 0.2}), 1.0, 2);
  const auto q = segmentation_quality(seg.bursts, seg.noise);
  CHECK_FALSE(q.silhouette.has_value());
  CHECK(q.noise_ratio == 0.0);
}

TEST_CASE("empty flow") {
  VoterFlow f;
  f.voter_id = "v";
  const auto seg = segment_voter(f, 1.0, 2);
  CHECK(seg.bursts.empty());
  CHECK(seg.noise.empty());
}

TEST_CASE("burst summary fields") {
  VoterFlow f = flow_at("v", {1.0, 1.2, 1.3});
  f.records[0].payload_len = 10;
  f.records[1].payload_len = 30;
  f.records[2].payload_len = 10;
  const auto seg = segment_voter(f, 1.0, 2);
  REQUIRE(seg.bursts.size() == 1);
  const auto& b = seg.bursts[0];
  CHECK(b.payload_set == PayloadSet{10, 30});
  CHECK(b.payload_total == 50);
  CHECK(b.payload_mean == doctest::Approx(50.0 / 3.0));
  CHECK(b.start_ts == 1.0);
  CHECK(b.end_ts == 1.3);
}

TEST_CASE("auto_eps lands inside the widest ratio jump") {
  for (const std::vector<double>& iats : {std::vector<double>{0.1, 0.1, 0.1, 30.0}, {0.05, 0.07, 20, 22}}) {
    const double eps = auto_eps(flow_from_iats(iats));
    const auto [lo, hi] = widest_jump(iats);
    CHECK(eps > lo);
    CHECK(eps < hi);
  }
  const double e1 = auto_eps(flow_from_iats({0.1, 0.1, 0.1, 30.0}));
  CHECK(e1 > 0.1);
  CHECK(e1 < 30.0);
  const double e2 = auto_eps(flow_from_iats({0.05, 0.07, 20, 22}));
  CHECK(e2 > 0.07);
  CHECK(e2 < 20.0);
}

TEST_CASE("auto_eps with equal IATs doubles the common value") {
  CHECK(auto_eps(flow_from_iats({0.5, 0.5, 0.5})) == doctest::Approx(1.0));
}

TEST_CASE("auto_eps needs three records") {
  CHECK_THROWS_AS(auto_eps(flow_at("v", {0, 1})), Error);
}

TEST_CASE("random flows: partition, ordering and shift invariance") {
  std::mt19937_64 rng(4);
  std::exponential_distribution<double> small(20.0), big(0.3);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> ts;
    double now = 0;
    for (int k = 0; k < 40; ++k) {
      now += rng() % 5 == 0 ? big(rng) : small(rng);
      ts.push_back(now);
    }
    const auto f = flow_at("v", ts);
    const double eps = auto_eps(f);
    const std::size_t min_pts = 1 + rng() % 3;
    const auto seg = segment_voter(f, eps, min_pts);

    std::vector<double> seen;
    for (const auto& b : seg.bursts)
      for (const auto& r : b.records) seen.push_back(r.ts);
    for (const auto& r : seg.noise) seen.push_back(r.ts);
    std::sort(seen.begin(), seen.end());
    CHECK(seen == ts);

    for (std::size_t i = 1; i < seg.bursts.size(); ++i) CHECK(seg.bursts[i - 1].end_ts < seg.bursts[i].start_ts);

    auto shifted = f;
    for (auto& r : shifted.records) r.ts += 1000.0;
    const auto seg2 = segment_voter(shifted, eps, min_pts);
    REQUIRE(seg2.bursts.size() == seg.bursts.size());
    for (std::size_t i = 0; i < seg.bursts.size(); ++i) CHECK(seg2.bursts[i].packet_count == seg.bursts[i].packet_count);
    CHECK(seg2.noise.size() == seg.noise.size());
  }
}

TEST_CASE("corpus segmentation uses per-voter eps and pools noise") {
  std::vector<VoterFlow> flows = {flow_at("a", {0, 0.1, 0.2, 10, 10.1, 10.2}), flow_at("b", {0, 0.2}),
                                  flow_at("c", {0, 5, 5.05, 5.1, 20, 20.1})};
  flows[1].voter_id = "b";
  const auto seg = segment_corpus(flows, SegmentOptions{});
  REQUIRE(seg.voters.size() == 3);
  CHECK(seg.voters[0].bursts.size() == 2);
  const auto q = corpus_quality(seg);
  CHECK(q.total_points == 14);
  CHECK(q.noise_points == seg.voters[2].noise.size() + seg.voters[1].noise.size());
}

TEST_CASE("burst csv layout") {
  const std::vector<VoterFlow> flows = {flow_at("a", {0, 0.1, 0.2, 10, 10.1, 10.2})};
  SegmentOptions o;
  o.eps = 1.0;
  const auto csv = write_burst_csv(segment_corpus(flows, o));
  CHECK(csv.rfind("voter_id,burst_index,start_ts,end_ts,packet_count,payload_total,payload_mean,payload_set\n", 0) == 0);
  CHECK(join_payload_set(PayloadSet{3, 17, 200}) == "3|17|200");
}

}
