#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "setmodel.hpp"
#include "trace.hpp"

namespace votetrace {

struct IatModel {
  double median = 0.05;  // log-normal, seconds
  double sigma = 0.3;
};

// With `probability`, IAT `index` of the burst gets `delay` seconds added.
struct MixtureDelay {
  std::size_t index = 1;
  double delay = 0.5;
  double probability = 0.5;
};

struct ActionProfile {
  int action_id = 0;
  std::string name;
  std::vector<std::int64_t> payloads;
  std::vector<std::int64_t> jitter;  // +/- uniform integer bytes per position
  std::vector<IatModel> iat;         // iat[i - 1] models ts[i] - ts[i - 1]
  std::optional<MixtureDelay> mixture;
};

enum class ValidityEffect { payload_divergence, timing_divergence };
const char* to_string(ValidityEffect e);

struct TimingDivergence {
  int action_id = 0;
  std::vector<std::size_t> indices;  // IAT indices whose sigma is scaled for spoiled ballots
  double sigma_factor = 1.5;
};

struct Pacing {
  double gap_median = 3.0;
  double gap_sigma = 0.3;
  double gap_floor = 2.0;
};

struct ResponseModel {
  double probability = 0.8;
  double delay_median = 0.01;
  double delay_sigma = 0.3;
  std::vector<std::int64_t> payloads{96};
};

struct PlatformProfile {
  std::string name;
  Platform platform = Platform::custom;
  TypicalSequence typical_sequence;
  std::size_t submission_step = 0;
  ValidityEffect validity_effect = ValidityEffect::payload_divergence;
  int valid_action = 0;
  int spoiled_action = 0;
  std::vector<ActionProfile> actions;
  std::optional<TimingDivergence> divergence;
  Pacing pacing;
  double window_seconds = 3600.0;
  ResponseModel response;
  double empty_record_probability = 0.0;

  const ActionProfile* find(int action_id) const;
  std::vector<int> submission_ids() const;
};

PlatformProfile parse_profile(std::string_view json_text);
// "eligo", "polyas", "eligo_like", "polyas_like", or a path to a profile file.
PlatformProfile load_profile(std::string_view name_or_path);
std::string_view builtin_profile_json(Platform platform);

struct CorpusSpec {
  std::size_t n_voters = 200;
  double valid_fraction = 0.5;
  std::uint64_t seed = 1;
  double abandon_fraction = 0.0;  // sessions that stop before submitting
  bool divergence = true;         // timing divergence for profiles that define it
  std::optional<double> sigma_factor;
  std::optional<double> submission_delay;  // overrides the mixture delay of the submission actions
  std::optional<Pacing> pacing;
  std::optional<double> window_seconds;
  std::string id_prefix = "v";
  unsigned threads = 0;
};

struct LabelRow {
  std::string voter_id;
  std::size_t burst_index = 0;
  int action_id = 0;
  std::optional<Validity> validity;  // empty for abandoned sessions

  bool operator==(const LabelRow&) const = default;
};

struct Corpus {
  std::vector<VoterFlow> flows;
  std::vector<LabelRow> labels;
};

Corpus generate_corpus(const PlatformProfile& profile, const CorpusSpec& spec);

inline constexpr std::string_view kLabelsCsvHeader = "voter_id,burst_index,action_id,validity";
std::string write_labels_csv(std::span<const LabelRow> labels);
std::vector<LabelRow> parse_labels_csv(std::string_view content);

// Deterministic 64-bit mixer used to derive per-voter streams.
std::uint64_t splitmix64(std::uint64_t x);

namespace builtin {
extern const char* const kEligoLikeJson;
extern const char* const kPolyasLikeJson;
}  // namespace builtin

}  // namespace votetrace
