#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "segment.hpp"
#include "trace.hpp"

namespace votetrace {

inline constexpr std::int64_t kDefaultPadTarget = 2085;

struct PaddingPolicy {
  std::int64_t target_len = kDefaultPadTarget;
};

struct VoterPadding {
  std::string voter_id;
  std::int64_t raw_bytes = 0;      // outgoing non-empty records only
  std::int64_t padded_bytes = 0;
  std::int64_t padding_bytes = 0;
  double overhead = 0.0;           // padding / raw, 0 when raw is 0
};

struct PaddingReport {
  std::int64_t target_len = 0;
  std::vector<VoterPadding> voters;
  std::int64_t raw_bytes = 0;
  std::int64_t padded_bytes = 0;
  std::int64_t padding_bytes = 0;
  std::size_t padded_records = 0;
  double overhead = 0.0;
  double mean_voter_overhead = 0.0;
  double max_voter_overhead = 0.0;
};

struct PaddingResult {
  std::vector<VoterFlow> flows;
  PaddingReport report;
};

// Sets every outgoing non-empty payload to the target length; everything else
// (timestamps, order, incoming records, labels) is untouched.
PaddingResult apply_padding(std::span<const VoterFlow> flows, const PaddingPolicy& policy);

struct DelayStats {
  std::size_t bursts = 0;
  double mean = 0.0;
  double max = 0.0;
  double total = 0.0;
};

struct EqualizationReport {
  std::size_t baseline_size = 0;
  std::int64_t baseline_payload_len = 0;  // length whose following IATs form the baseline
  std::uint64_t seed = 0;
  std::map<int, DelayStats> per_action;  // keyed by the supplied action id (kUnknownAction if none)
  DelayStats corpus;
};

struct EqualizationResult {
  std::vector<VoterFlow> flows;  // one per voter of the segmentation, bursts plus noise
  EqualizationReport report;
};

// IATs that follow a record of the corpus-wide maximum payload length inside
// a burst.
std::vector<double> baseline_from_max_length(const CorpusSegmentation& seg, std::int64_t* max_len = nullptr);

using BurstActionFn = std::function<int(const ActivityBurst&)>;

// Within each burst the IATs are redrawn from `baseline` with replacement,
// timestamps rebuilt from the burst start, and later bursts shifted so every
// inter-burst gap keeps its duration. Noise records move with the preceding
// burst. Added delay per burst is max(0, new duration - old duration).
EqualizationResult apply_time_equalization(const CorpusSegmentation& seg, std::span<const double> baseline,
                                           std::uint64_t seed, const BurstActionFn& action_of = nullptr);

std::string padding_report_json(const PaddingReport& report);
std::string equalization_report_json(const EqualizationReport& report);

}  // namespace votetrace
