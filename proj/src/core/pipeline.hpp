#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "clustermodel.hpp"
#include "countermeasure.hpp"
#include "evaluate.hpp"
#include "segment.hpp"
#include "setmodel.hpp"
#include "signature.hpp"
#include "synth.hpp"
#include "validity.hpp"

namespace votetrace {

enum class ValidityMode { automatic, rule, screen, none };
const char* to_string(ValidityMode m);

struct PipelineOptions {
  Platform platform = Platform::eligo_like;
  SegmentOptions segment;
  ClusterOptions cluster;
  SignatureOptions signature;
  ScreeningOptions screening;
  ValidityMode validity = ValidityMode::automatic;
  unsigned threads = 0;
};

// Action ids for the bursts of attacker-recorded reference sessions, taken
// from the label_action the attacker noted while recording (plurality per
// burst). Bursts without a note get ordinal ids after the largest noted id.
std::vector<int> reference_action_ids(std::span<const ActivityBurst> bursts);

ActionCatalog catalog_from_reference(std::span<const VoterFlow> reference, Platform platform,
                                     const SegmentOptions& segment);
// Fallback: the first voter with bursts, ordinal ids in session order.
ActionCatalog catalog_from_first_voter(const CorpusSegmentation& seg, Platform platform);

std::vector<ActionAssignment> cluster_assignments(const ClusterLabeling& labeling);

using BurstKey = std::pair<std::string, std::size_t>;

struct StageOutputs {
  CorpusSegmentation seg;
  CorpusSegmentationQuality seg_quality;
  ActionCatalog catalog;
  std::string catalog_source;
  std::vector<ActionAssignment> set_assignments;
  std::vector<SessionReport> sessions;
  std::optional<ClusterLabeling> labeling;
  std::string cluster_error;
  std::vector<ActionAssignment> cluster_assignments;
  SegmentationQuality cluster_quality;
  std::vector<ActionSignature> signatures;
  SubmissionVerdict verdict;
  std::set<std::string> submitters;
  std::vector<BurstKey> submission_bursts;  // bursts attributed to a submission id
  ValidityMode validity_mode = ValidityMode::none;
  std::optional<ValidityRule> rule;
  std::string validity_note;
  std::vector<ValidityVerdict> verdicts;
  std::optional<ScreeningReport> screening;

  const ActivityBurst* burst(const BurstKey& key) const;
};

// Runs segmentation, both classifiers, signatures and the validity path. The
// truth map, when given, only supplies the group split for screening.
StageOutputs run_stages(std::span<const VoterFlow> flows, std::span<const VoterFlow> reference,
                        const PipelineOptions& options,
                        const std::map<std::string, Validity>* screening_split = nullptr);

// Ground truth recovered from record labels, one row per segmented burst.
std::vector<LabelRow> labels_from_trace(const CorpusSegmentation& seg);

enum class CountermeasureKind { none, padding, equalization };
const char* to_string(CountermeasureKind k);

struct CountermeasureConfig {
  CountermeasureKind kind = CountermeasureKind::none;
  PaddingPolicy padding;
  std::uint64_t seed = 1;
};

struct AttackEvalResult {
  Platform platform = Platform::custom;
  std::size_t voters = 0;
  StageOutputs before;
  MetricsReport metrics_before;
  CountermeasureKind countermeasure = CountermeasureKind::none;
  std::optional<StageOutputs> after;
  std::optional<MetricsReport> metrics_after;
  std::optional<PaddingReport> padding;
  std::optional<EqualizationReport> equalization;
  std::vector<LabelRow> labels;
};

AttackEvalResult attack_eval(std::span<const VoterFlow> flows, std::span<const LabelRow> labels,
                             std::span<const VoterFlow> reference, const PipelineOptions& options,
                             const CountermeasureConfig& countermeasure = {});

std::string attack_report_json(const AttackEvalResult& result);

// Submission-burst IATs for the external classifier: voter_id,index,iat,label
std::string export_submission_iats(const StageOutputs& stages, std::span<const LabelRow> labels);

MetricsReport stage_metrics(const StageOutputs& stages, std::span<const LabelRow> labels, Platform platform);

}  // namespace votetrace
