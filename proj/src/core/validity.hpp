#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "payload_set.hpp"
#include "segment.hpp"
#include "signature.hpp"
#include "stattests.hpp"

namespace votetrace {

enum class VerdictKind { valid, spoiled, undecidable };
enum class VerdictBasis { payload_rule, statistical, none };

const char* to_string(VerdictKind v);
const char* to_string(VerdictBasis b);

struct ValidityRule {
  int valid_action_id = kUnknownAction;
  int spoiled_action_id = kUnknownAction;
  std::vector<PayloadSet> valid_sets;    // distinct observed sets, sorted
  std::vector<PayloadSet> spoiled_sets;
  PayloadSet valid_distinctive;          // lengths seen only in the valid family
  PayloadSet spoiled_distinctive;
  double valid_jump = 0.0;
  double spoiled_jump = 0.0;
};

struct ValidityVerdict {
  std::string voter_id;
  VerdictKind verdict = VerdictKind::undecidable;
  VerdictBasis basis = VerdictBasis::none;
};

// One group of submission bursts as produced by clustering and anchoring.
struct SubmissionCluster {
  int action_id = kUnknownAction;
  std::vector<const ActivityBurst*> bursts;
};

// Needs exactly two clusters with disjoint set families; the one whose
// signature shows the larger mid-curve jump is the valid one.
ValidityRule derive_payload_rule(std::span<const SubmissionCluster> clusters, const SignatureOptions& options = {});

ValidityVerdict classify_validity_by_rule(const std::string& voter_id, const PayloadSet& submission_set,
                                          const ValidityRule& rule);

std::string rule_to_json(const ValidityRule& rule);

struct ScreeningOptions {
  std::size_t index_lo = 1;  // IAT index i is ts[i] - ts[i-1] inside a burst
  std::size_t index_hi = 4;
  std::size_t k = 7;         // significant tests needed to flag an index
  double alpha = 0.05;
  std::size_t min_group = 3;
  TestOptions tests;
  unsigned threads = 0;
};

struct IndexScreening {
  std::size_t packet_index = 0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::vector<TestReport> reports;  // screening_tests() order; empty when skipped
  std::size_t significant = 0;
  bool flagged = false;
  std::string note;
};

struct ScreeningReport {
  std::vector<IndexScreening> indices;
  double alpha = 0.05;
  std::size_t k = 0;
  std::vector<std::size_t> flagged_indices() const;
};

// IATs at each packet index of the two groups' bursts.
std::vector<double> iats_at_index(std::span<const ActivityBurst* const> bursts, std::size_t index);

ScreeningReport screen_timing_leakage(std::span<const ActivityBurst* const> group_a,
                                      std::span<const ActivityBurst* const> group_b, const ScreeningOptions& options);

std::string write_screening_csv(const ScreeningReport& report);

}  // namespace votetrace
