#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "error.hpp"
#include "synth.hpp"
#include "trace.hpp"

using namespace votetrace;

namespace {

struct TruthBurst {
  int action = 0;
  std::optional<Validity> validity;
  std::vector<TraceRecord> records;
};

// Bursts recovered from the record labels: consecutive outgoing non-empty
// records with the same label_action.
std::vector<TruthBurst> truth_bursts(const VoterFlow& f) {
  std::vector<TruthBurst> out;
  for (const auto& r : f.records) {
    if (r.direction != Direction::outgoing || r.payload_len == 0) continue;
    if (out.empty() || out.back().action != *r.label_action) out.push_back({*r.label_action, r.label_validity, {}});
    out.back().records.push_back(r);
  }
  return out;
}

PayloadSet set_of(const TruthBurst& b) {
  std::vector<std::int64_t> v;
  for (const auto& r : b.records) v.push_back(r.payload_len);
  return make_payload_set(v);
}

CorpusSpec spec(std::size_t n, std::uint64_t seed) {
  CorpusSpec s;
  s.n_voters = n;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("eligo, 200 voters, seed 7: 100 valid and 100 spoiled submissions") {
  const auto c = generate_corpus(load_profile("eligo"), spec(200, 7));
  CHECK(c.flows.size() == 200);
  std::set<std::string> with3, with7;
  for (const auto& l : c.labels) {
    if (l.action_id == 3) with3.insert(l.voter_id);
    if (l.action_id == 7) with7.insert(l.voter_id);
  }
  CHECK(with3.size() == 100);
  CHECK(with7.size() == 100);
  for (const auto& v : with3) CHECK(with7.count(v) == 0);
}

TEST_CASE("polyas session has four bursts 0, 1, 2, 3") {
  const auto c = generate_corpus(load_profile("polyas"), spec(5, 1));
  for (const auto& f : c.flows) {
    const auto bs = truth_bursts(f);
    REQUIRE(bs.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(bs[static_cast<std::size_t>(i)].action == i);
  }
  std::map<std::string, std::vector<int>> seq;
  for (const auto& l : c.labels) seq[l.voter_id].push_back(l.action_id);
  for (const auto& [v, s] : seq) CHECK(s == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("eligo sessions follow the typical sequence") {
  const auto c = generate_corpus(load_profile("eligo"), spec(20, 3));
  for (const auto& f : c.flows) {
    std::vector<int> s;
    for (const auto& b : truth_bursts(f)) s.push_back(b.action);
    const bool valid = s.size() == 7 && s[4] == 3;
    const std::vector<int> expect = {0, 1, 2, 4, valid ? 3 : 7, 5, 6};
    CHECK(s == expect);
  }
}

TEST_CASE("same seed, same bytes; other seed, other bytes") {
  const auto p = load_profile("polyas");
  const auto a = generate_corpus(p, spec(30, 11));
  const auto b = generate_corpus(p, spec(30, 11));
  const auto c = generate_corpus(p, spec(30, 12));
  CHECK(write_trace_csv(a.flows) == write_trace_csv(b.flows));
  CHECK(write_labels_csv(a.labels) == write_labels_csv(b.labels));
  CHECK(write_trace_csv(a.flows) != write_trace_csv(c.flows));
}

TEST_CASE("thread count does not change the output") {
  const auto p = load_profile("eligo");
  auto s1 = spec(40, 5), s4 = spec(40, 5);
  s1.threads = 1;
  s4.threads = 4;
  CHECK(write_trace_csv(generate_corpus(p, s1).flows) == write_trace_csv(generate_corpus(p, s4).flows));
}

TEST_CASE("generated traces pass ingest and labels round trip") {
  const auto c = generate_corpus(load_profile("eligo"), spec(25, 2));
  const auto text = write_trace_csv(c.flows);
  std::vector<VoterFlow> back;
  REQUIRE_NOTHROW(back = parse_trace_csv(text));
  REQUIRE(back.size() == c.flows.size());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i].records == c.flows[i].records);
  CHECK(parse_labels_csv(write_labels_csv(c.labels)) == c.labels);
}

TEST_CASE("eligo submission sets differ by validity; polyas ones do not") {
  auto families = [](const Corpus& c, int valid_id, int spoiled_id) {
    std::set<PayloadSet> valid, spoiled;
    for (const auto& f : c.flows)
      for (const auto& b : truth_bursts(f)) {
        if (b.action == valid_id && b.validity == Validity::valid) valid.insert(set_of(b));
        if (b.action == spoiled_id && b.validity == Validity::spoiled) spoiled.insert(set_of(b));
      }
    return std::pair{valid, spoiled};
  };
  const auto [ev, es] = families(generate_corpus(load_profile("eligo"), spec(200, 4)), 3, 7);
  REQUIRE_FALSE(ev.empty());
  REQUIRE_FALSE(es.empty());
  for (const auto& s : ev) CHECK(es.count(s) == 0);

  const auto [pv, ps] = families(generate_corpus(load_profile("polyas"), spec(200, 4)), 3, 3);
  CHECK_FALSE(pv.empty());
  CHECK(pv == ps);
}

TEST_CASE("submission offsets are the most concentrated") {
  // Spread of the within-burst offsets at packet index 1: median gap between
  // neighbors after sorting, relative to the range.
  for (const char* name : {"eligo", "polyas"}) {
    const auto c = generate_corpus(load_profile(name), spec(200, 6));
    std::map<int, std::vector<double>> offsets;
    for (const auto& f : c.flows)
      for (const auto& b : truth_bursts(f))
        if (b.records.size() > 1 && b.validity != Validity::spoiled)
          offsets[b.action].push_back(b.records[1].ts - b.records[0].ts);
    std::map<int, double> spread;
    for (auto& [a, v] : offsets) {
      std::sort(v.begin(), v.end());
      std::vector<double> gaps;
      for (std::size_t i = 1; i < v.size(); ++i) gaps.push_back(v[i] - v[i - 1]);
      std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
      spread[a] = gaps[gaps.size() / 2] / (v.back() - v.front());
    }
    INFO(name);
    for (const auto& [a, s] : spread)
      if (a != 3) CHECK(spread[3] < s);
  }
}

TEST_CASE("abandoned sessions stop before submitting") {
  auto s = spec(20, 1);
  s.abandon_fraction = 0.25;
  const auto c = generate_corpus(load_profile("eligo"), s);
  std::map<std::string, bool> submitted;
  std::size_t no_validity = 0;
  for (const auto& l : c.labels) {
    submitted[l.voter_id] = submitted[l.voter_id] || l.action_id == 3 || l.action_id == 7;
    if (!l.validity) ++no_validity;
  }
  std::size_t abandoned = 0;
  for (const auto& [v, sub] : submitted) abandoned += !sub;
  CHECK(abandoned == 5);
  CHECK(no_validity > 0);
}

TEST_CASE("profile validation") {
  CHECK_THROWS_AS(load_profile("no_such_profile"), Error);
  CHECK_THROWS_AS(parse_profile("{}"), Error);
  auto s = spec(10, 1);
  s.valid_fraction = 1.5;
  CHECK_THROWS_AS(generate_corpus(load_profile("eligo"), s), Error);
  const auto e = load_profile("eligo");
  CHECK(e.actions.size() == 8);
  CHECK(load_profile("polyas").actions.size() == 4);
  std::int64_t max_len = 0;
  for (const auto& a : e.actions)
    for (auto l : a.payloads) max_len = std::max(max_len, l);
  CHECK(max_len == 2085);
}

}
