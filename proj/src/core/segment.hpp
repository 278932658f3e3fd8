#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "payload_set.hpp"
#include "trace.hpp"

namespace votetrace {

// A time-contiguous group of outgoing records attributed to one voter action.
struct ActivityBurst {
  std::string voter_id;
  std::size_t burst_index = 0;
  std::vector<TraceRecord> records;
  double start_ts = 0.0;
  double end_ts = 0.0;
  PayloadSet payload_set;
  std::int64_t payload_total = 0;
  double payload_mean = 0.0;
  std::size_t packet_count = 0;
};

// Derives every summary field from the records; records must be non-empty.
ActivityBurst make_burst(std::string voter_id, std::size_t burst_index,
                         std::vector<TraceRecord> records);

struct VoterSegmentation {
  std::string voter_id;
  double eps = 0.0;
  std::vector<ActivityBurst> bursts;  // ordered by start_ts
  std::vector<TraceRecord> noise;
};

struct SegmentationQuality {
  std::optional<double> silhouette;
  double noise_ratio = 0.0;
};

struct SegmentOptions {
  std::optional<double> eps;  // unset: auto_eps per voter
  std::size_t min_pts = 2;
  unsigned threads = 0;  // 0: hardware concurrency
};

VoterSegmentation segment_voter(const VoterFlow& flow, double eps, std::size_t min_pts);

// Gap heuristic: over the positive IATs sorted ascending, locate the largest
// ratio between neighbors and return the midpoint of that jump. When no jump
// exists (all IATs equal) the fallback is twice the common IAT.
double auto_eps(const VoterFlow& flow);

SegmentationQuality segmentation_quality(std::span<const ActivityBurst> bursts,
                                         std::span<const TraceRecord> noise);

struct CorpusSegmentation {
  std::vector<VoterSegmentation> voters;
  std::vector<std::string> empty_flows;
};

struct CorpusSegmentationQuality {
  double mean_silhouette = 0.0;  // over voters with a defined silhouette
  double sd_silhouette = 0.0;
  std::size_t voters_scored = 0;
  double noise_ratio = 0.0;  // pooled over every record
  std::size_t noise_points = 0;
  std::size_t total_points = 0;
};

// Segments already-filtered flows. Voters whose flow is too short for
// auto_eps are segmented with min_pts alone (eps irrelevant) when eps is unset.
CorpusSegmentation segment_corpus(std::span<const VoterFlow> filtered, const SegmentOptions& options);
CorpusSegmentationQuality corpus_quality(const CorpusSegmentation& seg);

std::string write_burst_csv(const CorpusSegmentation& seg);
std::string join_payload_set(const PayloadSet& set);

// All bursts of the corpus in voter order, then burst order.
std::vector<const ActivityBurst*> all_bursts(const CorpusSegmentation& seg);

}  // namespace votetrace
