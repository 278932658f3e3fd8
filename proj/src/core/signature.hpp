#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "segment.hpp"
#include "setmodel.hpp"

namespace votetrace {

struct SignatureOptions {
  std::size_t window = 5;    // rolling-mean width, in samples
  std::size_t length = 100;  // common resampling length L
  double central_lo = 0.25;  // "mid-curve" window, fractions of the curve
  double central_hi = 0.75;
  double threshold = 0.15;
};

struct ActionSignature {
  int action_id = kUnknownAction;
  std::vector<double> curve;  // non-decreasing, values in [0, 1]
  std::size_t support = 0;    // (voter, packet index) samples used
  std::size_t voters = 0;
  double jump_score = 0.0;
  double jump_position = 0.0;
};

// Steps 2-4 for one packet-index group: sort, trailing rolling mean (partial
// windows at the start), min-max normalize (constant groups become zeros),
// then linear resampling to `length` points.
std::vector<double> normalized_trend(std::vector<double> offsets, std::size_t window, std::size_t length);

// Largest consecutive rise of the curve whose two points both sit inside
// [lo, hi] (point j has position j / (L - 1)); position is (j + 1) / L.
std::pair<double, double> jump_in_window(std::span<const double> curve, double lo, double hi);

// All bursts must carry the same action. Offsets are record ts minus the
// burst's start_ts; packet index 0 is identically zero and is left out of the
// average. Fewer than two contributing voters is an error.
ActionSignature build_signature(std::span<const ActivityBurst* const> bursts, int action_id,
                                const SignatureOptions& options);

struct SubmissionVerdict {
  std::optional<int> detected_action_id;
  double jump_score = 0.0;
  double threshold = 0.0;
  std::map<int, double> scores;  // action id -> jump score
};

SubmissionVerdict detect_submission(std::span<const ActionSignature> signatures, const SignatureOptions& options);

struct SubmissionTimes {
  std::vector<std::pair<std::string, double>> submitters;  // (voter, start_ts)
  std::vector<std::string> non_submitters;
};

// voters lists every voter in corpus order so abandoned sessions are reported.
SubmissionTimes voter_submission_times(const SubmissionVerdict& verdict, std::span<const ActionAssignment> assignments,
                                       const CorpusSegmentation& seg);

// Groups the corpus bursts by assigned action id (UNKNOWN dropped).
std::map<int, std::vector<const ActivityBurst*>> group_by_action(const CorpusSegmentation& seg,
                                                                 std::span<const ActionAssignment> assignments);

// Signatures for every action with enough voters; sparse actions are skipped.
std::vector<ActionSignature> build_signatures(const std::map<int, std::vector<const ActivityBurst*>>& groups,
                                              const SignatureOptions& options);

std::string write_curves_csv(std::span<const ActionSignature> signatures);
std::string verdict_to_json(const SubmissionVerdict& verdict, std::span<const ActionSignature> signatures);

}  // namespace votetrace
