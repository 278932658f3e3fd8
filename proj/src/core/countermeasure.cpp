#include "countermeasure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <json.hpp>

#include "error.hpp"
#include "setmodel.hpp"
#include "synth.hpp"

namespace votetrace {

namespace {
constexpr const char* kModule = "countermeasure";

void add_delay(DelayStats& s, double d) {
  ++s.bursts;
  s.total += d;
  s.max = std::max(s.max, d);
  s.mean = s.total / static_cast<double>(s.bursts);
}

nlohmann::ordered_json delay_json(const DelayStats& s) {
  nlohmann::ordered_json j;
  j["bursts"] = s.bursts;
  j["mean_added_delay_s"] = s.mean;
  j["max_added_delay_s"] = s.max;
  j["total_added_delay_s"] = s.total;
  return j;
}
}  // namespace

PaddingResult apply_padding(std::span<const VoterFlow> flows, const PaddingPolicy& policy) {
  if (policy.target_len <= 0) throw Error(kModule, ErrorKind::usage, "padding target must be positive");
  for (const auto& f : flows)
    for (const auto& r : f.records)
      if (r.direction == Direction::outgoing && r.payload_len > policy.target_len)
        throw Error(kModule, ErrorKind::data,
                    "observed payload " + std::to_string(r.payload_len) + " (voter '" + f.voter_id +
                        "') exceeds padding target " + std::to_string(policy.target_len));
  PaddingResult out;
  out.report.target_len = policy.target_len;
  out.flows.assign(flows.begin(), flows.end());
  double sum_overhead = 0.0;
  for (auto& f : out.flows) {
    VoterPadding vp;
    vp.voter_id = f.voter_id;
    for (auto& r : f.records) {
      if (r.direction != Direction::outgoing || r.payload_len <= 0) continue;
      vp.raw_bytes += r.payload_len;
      vp.padding_bytes += policy.target_len - r.payload_len;
      r.payload_len = policy.target_len;
      vp.padded_bytes += r.payload_len;
      ++out.report.padded_records;
    }
    vp.overhead = vp.raw_bytes > 0 ? static_cast<double>(vp.padding_bytes) / static_cast<double>(vp.raw_bytes) : 0.0;
    out.report.raw_bytes += vp.raw_bytes;
    out.report.padded_bytes += vp.padded_bytes;
    out.report.padding_bytes += vp.padding_bytes;
    out.report.max_voter_overhead = std::max(out.report.max_voter_overhead, vp.overhead);
    sum_overhead += vp.overhead;
    out.report.voters.push_back(std::move(vp));
  }
  if (out.report.raw_bytes > 0)
    out.report.overhead = static_cast<double>(out.report.padding_bytes) / static_cast<double>(out.report.raw_bytes);
  if (!out.report.voters.empty()) out.report.mean_voter_overhead = sum_overhead / static_cast<double>(out.report.voters.size());
  return out;
}

std::vector<double> baseline_from_max_length(const CorpusSegmentation& seg, std::int64_t* max_len) {
  std::int64_t top = 0;
  for (const auto& v : seg.voters)
    for (const auto& b : v.bursts)
      for (const auto& r : b.records) top = std::max(top, r.payload_len);
  std::vector<double> out;
  for (const auto& v : seg.voters)
    for (const auto& b : v.bursts)
      for (std::size_t k = 0; k + 1 < b.records.size(); ++k)
        if (b.records[k].payload_len == top) out.push_back(b.records[k + 1].ts - b.records[k].ts);
  if (max_len) *max_len = top;
  return out;
}

EqualizationResult apply_time_equalization(const CorpusSegmentation& seg, std::span<const double> baseline,
                                           std::uint64_t seed, const BurstActionFn& action_of) {
  if (baseline.empty()) throw Error(kModule, ErrorKind::data, "empty baseline IAT distribution");
  for (double d : baseline)
    if (!(d >= 0.0) || !std::isfinite(d)) throw Error(kModule, ErrorKind::data, "baseline IATs must be finite and >= 0");
  EqualizationResult out;
  out.report.baseline_size = baseline.size();
  out.report.seed = seed;
  for (std::size_t v = 0; v < seg.voters.size(); ++v) {
    const auto& voter = seg.voters[v];
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(v + 1)));
    std::uniform_int_distribution<std::size_t> pick(0, baseline.size() - 1);
    VoterFlow flow;
    flow.voter_id = voter.voter_id;
    double shift = 0.0;  // cumulative displacement applied to everything after the current burst start
    std::size_t noise_pos = 0;
    auto flush_noise_before = [&](double ts_limit) {
      while (noise_pos < voter.noise.size() && voter.noise[noise_pos].ts < ts_limit) {
        auto r = voter.noise[noise_pos++];
        r.ts += shift;
        flow.records.push_back(std::move(r));
      }
    };
    for (const auto& b : voter.bursts) {
      flush_noise_before(b.start_ts);
      const double old_duration = b.end_ts - b.start_ts;
      double t = b.start_ts + shift;
      for (std::size_t k = 0; k < b.records.size(); ++k) {
        if (k > 0) t += baseline[pick(rng)];
        auto r = b.records[k];
        r.ts = t;
        flow.records.push_back(std::move(r));
      }
      const double new_duration = t - (b.start_ts + shift);
      const double added = std::max(0.0, new_duration - old_duration);
      shift += new_duration - old_duration;
      const int action = action_of ? action_of(b) : kUnknownAction;
      add_delay(out.report.per_action[action], added);
      add_delay(out.report.corpus, added);
    }
    flush_noise_before(std::numeric_limits<double>::infinity());
    std::stable_sort(flow.records.begin(), flow.records.end(),
                     [](const TraceRecord& a, const TraceRecord& b) { return a.ts < b.ts; });
    out.flows.push_back(std::move(flow));
  }
  for (const auto& id : seg.empty_flows) out.flows.push_back(VoterFlow{id, {}});
  return out;
}

std::string padding_report_json(const PaddingReport& report) {
  nlohmann::ordered_json j;
  j["countermeasure"] = "padding";
  j["target_len"] = report.target_len;
  j["padded_records"] = report.padded_records;
  j["raw_bytes"] = report.raw_bytes;
  j["padded_bytes"] = report.padded_bytes;
  j["padding_bytes"] = report.padding_bytes;
  j["conservation_holds"] = report.padded_bytes == report.raw_bytes + report.padding_bytes;
  j["memory_overhead_fraction"] = report.overhead;
  j["mean_voter_overhead_fraction"] = report.mean_voter_overhead;
  j["max_voter_overhead_fraction"] = report.max_voter_overhead;
  auto& voters = j["voters"] = nlohmann::ordered_json::array();
  for (const auto& v : report.voters) {
    nlohmann::ordered_json e;
    e["voter_id"] = v.voter_id;
    e["raw_bytes"] = v.raw_bytes;
    e["padded_bytes"] = v.padded_bytes;
    e["padding_bytes"] = v.padding_bytes;
    e["overhead_fraction"] = v.overhead;
    voters.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string equalization_report_json(const EqualizationReport& report) {
  nlohmann::ordered_json j;
  j["countermeasure"] = "time_equalization";
  j["seed"] = report.seed;
  j["baseline_size"] = report.baseline_size;
  j["baseline_payload_len"] = report.baseline_payload_len;
  j["corpus"] = delay_json(report.corpus);
  auto& per = j["per_action"] = nlohmann::ordered_json::array();
  for (const auto& [id, s] : report.per_action) {
    auto e = delay_json(s);
    e["action_id"] = id;
    per.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

}  // namespace votetrace
