#include "segment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "dbscan.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "text.hpp"

namespace votetrace {

namespace {
constexpr const char* kModule = "segment";
}

ActivityBurst make_burst(std::string voter_id, std::size_t burst_index,
                         std::vector<TraceRecord> records) {
  if (records.empty()) throw Error(kModule, ErrorKind::internal, "burst without records");
  ActivityBurst b;
  b.voter_id = std::move(voter_id);
  b.burst_index = burst_index;
  b.start_ts = records.front().ts;
  b.end_ts = records.back().ts;
  std::vector<std::int64_t> lens;
  lens.reserve(records.size());
  for (const auto& r : records) {
    lens.push_back(r.payload_len);
    b.payload_total += r.payload_len;
  }
  b.payload_set = make_payload_set(std::move(lens));
  b.packet_count = records.size();
  b.payload_mean = static_cast<double>(b.payload_total) / static_cast<double>(b.packet_count);
  b.records = std::move(records);
  return b;
}

VoterSegmentation segment_voter(const VoterFlow& flow, double eps, std::size_t min_pts) {
  if (!(eps > 0.0)) throw Error(kModule, ErrorKind::usage, "eps must be positive");
  if (min_pts < 1) throw Error(kModule, ErrorKind::usage, "min_pts must be at least 1");
  VoterSegmentation out;
  out.voter_id = flow.voter_id;
  out.eps = eps;
  if (flow.records.empty()) return out;

  std::vector<double> ts;
  ts.reserve(flow.records.size());
  for (const auto& r : flow.records) ts.push_back(r.ts);
  const auto labels = dbscan_sorted_1d(ts, eps, min_pts);

  std::map<int, std::vector<TraceRecord>> clusters;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kNoise) {
      out.noise.push_back(flow.records[i]);
    } else {
      clusters[labels[i]].push_back(flow.records[i]);
    }
  }
  std::vector<std::vector<TraceRecord>> groups;
  groups.reserve(clusters.size());
  for (auto& [id, recs] : clusters) groups.push_back(std::move(recs));
  std::stable_sort(groups.begin(), groups.end(),
                   [](const auto& a, const auto& b) { return a.front().ts < b.front().ts; });
  for (std::size_t i = 0; i < groups.size(); ++i) {
    out.bursts.push_back(make_burst(flow.voter_id, i, std::move(groups[i])));
  }
  return out;
}

double auto_eps(const VoterFlow& flow) {
  if (flow.records.size() < 3) {
    throw Error(kModule, ErrorKind::data,
                "voter '" + flow.voter_id + "' has fewer than 3 records; pass eps explicitly");
  }
  std::vector<double> iats;
  for (double d : flow.iats()) {
    if (d > 0.0) iats.push_back(d);
  }
  if (iats.empty()) {
    throw Error(kModule, ErrorKind::data,
                "voter '" + flow.voter_id + "' has no positive inter-arrival time; pass eps explicitly");
  }
  std::sort(iats.begin(), iats.end());
  double best_ratio = 1.0;
  std::size_t best = iats.size();
  for (std::size_t k = 0; k + 1 < iats.size(); ++k) {
    const double ratio = iats[k + 1] / iats[k];
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = k;
    }
  }
  if (best == iats.size()) return 2.0 * iats.back();
  return 0.5 * (iats[best] + iats[best + 1]);
}

SegmentationQuality segmentation_quality(std::span<const ActivityBurst> bursts,
                                         std::span<const TraceRecord> noise) {
  SegmentationQuality q;
  std::vector<double> ts;
  std::vector<int> labels;
  for (const auto& b : bursts) {
    for (const auto& r : b.records) {
      ts.push_back(r.ts);
      labels.push_back(static_cast<int>(b.burst_index));
    }
  }
  const std::size_t total = ts.size() + noise.size();
  q.noise_ratio = total == 0 ? 0.0 : static_cast<double>(noise.size()) / static_cast<double>(total);
  q.silhouette = silhouette(labels, [&](std::size_t i, std::size_t j) { return std::abs(ts[i] - ts[j]); });
  return q;
}

CorpusSegmentation segment_corpus(std::span<const VoterFlow> filtered, const SegmentOptions& options) {
  CorpusSegmentation out;
  out.empty_flows = empty_flow_ids(filtered);
  const std::size_t n = filtered.size();

  std::vector<double> eps(n, 0.0);
  std::vector<bool> has_eps(n, false);
  if (options.eps) {
    if (!(*options.eps > 0.0)) throw Error(kModule, ErrorKind::usage, "eps must be positive");
    std::fill(eps.begin(), eps.end(), *options.eps);
    std::fill(has_eps.begin(), has_eps.end(), true);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      if (filtered[i].records.size() < 3) continue;
      eps[i] = auto_eps(filtered[i]);
      has_eps[i] = true;
    }
    // Short flows borrow the median eps of the rest of the corpus.
    std::vector<double> known;
    for (std::size_t i = 0; i < n; ++i) {
      if (has_eps[i]) known.push_back(eps[i]);
    }
    double fallback = 1.0;
    if (!known.empty()) {
      std::nth_element(known.begin(), known.begin() + static_cast<std::ptrdiff_t>(known.size() / 2), known.end());
      fallback = known[known.size() / 2];
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!has_eps[i]) eps[i] = fallback;
    }
  }

  out.voters.resize(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    out.voters[i] = segment_voter(filtered[i], eps[i], options.min_pts);
  });
  return out;
}

CorpusSegmentationQuality corpus_quality(const CorpusSegmentation& seg) {
  CorpusSegmentationQuality q;
  std::vector<double> scores;
  for (const auto& v : seg.voters) {
    const auto vq = segmentation_quality(v.bursts, v.noise);
    if (vq.silhouette) scores.push_back(*vq.silhouette);
    q.noise_points += v.noise.size();
    q.total_points += v.noise.size();
    for (const auto& b : v.bursts) q.total_points += b.packet_count;
  }
  q.voters_scored = scores.size();
  if (!scores.empty()) {
    q.mean_silhouette = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
    double ss = 0.0;
    for (double s : scores) ss += (s - q.mean_silhouette) * (s - q.mean_silhouette);
    q.sd_silhouette = std::sqrt(ss / static_cast<double>(scores.size()));
  }
  q.noise_ratio = q.total_points == 0 ? 0.0
                                      : static_cast<double>(q.noise_points) / static_cast<double>(q.total_points);
  return q;
}

std::string join_payload_set(const PayloadSet& set) {
  std::string out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i) out += '|';
    out += std::to_string(set[i]);
  }
  return out;
}

std::string write_burst_csv(const CorpusSegmentation& seg) {
  std::string out = "voter_id,burst_index,start_ts,end_ts,packet_count,payload_total,payload_mean,payload_set\n";
  for (const auto& v : seg.voters) {
    for (const auto& b : v.bursts) {
      out += text::csv_escape(b.voter_id) + ',' + std::to_string(b.burst_index) + ',' +
             text::format_double(b.start_ts) + ',' + text::format_double(b.end_ts) + ',' +
             std::to_string(b.packet_count) + ',' + std::to_string(b.payload_total) + ',' +
             text::format_double(b.payload_mean) + ',' + join_payload_set(b.payload_set) + '\n';
    }
  }
  return out;
}

std::vector<const ActivityBurst*> all_bursts(const CorpusSegmentation& seg) {
  std::vector<const ActivityBurst*> out;
  for (const auto& v : seg.voters) {
    for (const auto& b : v.bursts) out.push_back(&b);
  }
  return out;
}

}  // namespace votetrace
