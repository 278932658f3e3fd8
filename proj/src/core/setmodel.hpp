#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "payload_set.hpp"
#include "segment.hpp"

namespace votetrace {

enum class Platform { eligo_like, polyas_like, custom };

const char* to_string(Platform p);
std::optional<Platform> parse_platform(std::string_view token);

struct CatalogAction {
  int action_id = 0;
  PayloadSet payload_set;         // S_i
  PayloadSet shared_subset;       // T_i: elements shared with any other action
  PayloadSet max_overlap_subset;  // T*_i: overlap with the most-overlapping action
  PayloadSet distinctive_set;     // D_i: elements no other action contains
};

struct ActionCatalog {
  Platform platform = Platform::custom;
  std::vector<CatalogAction> actions;

  const CatalogAction* find(int action_id) const;
};

inline constexpr int kUnknownAction = -1;

enum class RuleFired { exact, distinctive, overlap_threshold, none };
const char* to_string(RuleFired r);

struct ActionAssignment {
  std::string voter_id;
  std::size_t burst_index = 0;
  int action_id = kUnknownAction;
  RuleFired rule = RuleFired::none;
};

// Learns the unique actions of a reference session. reference_sets are the
// per-burst payload sets in session order; action_ids (same length, or empty
// for ordinal ids) name them. Duplicate sets keep their first occurrence.
ActionCatalog build_catalog(std::span<const PayloadSet> reference_sets, std::span<const int> action_ids,
                            Platform platform);
ActionCatalog build_catalog(std::span<const ActivityBurst> reference_bursts, std::span<const int> action_ids,
                            Platform platform);

// Recomputes T_i, T*_i and D_i of every action from the current sets.
void refresh_catalog_subsets(ActionCatalog& catalog);

ActionAssignment classify_burst(const ActivityBurst& burst, const ActionCatalog& catalog);
ActionAssignment classify_payload_set(const PayloadSet& observed, const ActionCatalog& catalog);

struct SessionReport {
  std::string voter_id;
  std::vector<int> sequence;  // assigned ids in burst order, kUnknownAction kept
  std::vector<std::string> deviations;
  bool unclassifiable = false;
};

// A typical sequence is a list of steps; each step lists acceptable ids.
using TypicalSequence = std::vector<std::vector<int>>;
TypicalSequence typical_sequence(Platform platform);

// Action ids of the ballot-submission step (valid first).
std::vector<int> submission_action_ids(Platform platform);

struct SessionClassification {
  std::vector<ActionAssignment> assignments;
  SessionReport report;
};

SessionClassification classify_session(std::span<const ActivityBurst> bursts, const ActionCatalog& catalog,
                                       const TypicalSequence& expected);

// Canonical JSON: actions in catalog order, every set a sorted array.
std::string catalog_to_json(const ActionCatalog& catalog);
ActionCatalog catalog_from_json(std::string_view json_text);

}  // namespace votetrace
