#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "setmodel.hpp"
#include "synth.hpp"
#include "validity.hpp"

namespace votetrace {

struct AccuracyRow {
  std::string label;     // "0", "1", ... or "3/7" for a merged submission row
  std::vector<int> ids;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
};

struct ActionAccuracy {
  std::map<int, AccuracyRow> per_action;
  std::vector<AccuracyRow> rows;  // table layout: sequence order, submission ids merged
  double average = 0.0;           // mean over table rows with support
  std::size_t correct = 0;
  std::size_t total = 0;
};

// Joins label rows and assignments on (voter_id, burst_index). A label row
// without a matching assignment counts as wrong.
ActionAccuracy action_accuracy(std::span<const LabelRow> labels, std::span<const ActionAssignment> assignments,
                               Platform platform);

struct ValidityMetrics {
  std::size_t labeled = 0;  // voters with a ground-truth validity
  std::size_t correct = 0;
  std::size_t undecidable = 0;
  // spoiled is the positive class
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
};

std::map<std::string, Validity> voter_validity(std::span<const LabelRow> labels);

ValidityMetrics validity_metrics(std::span<const LabelRow> labels, std::span<const ValidityVerdict> verdicts);

struct SubmissionSetCheck {
  bool exact = false;
  std::size_t predicted = 0;
  std::size_t truth = 0;
  std::size_t missing = 0;
  std::size_t extra = 0;
};

SubmissionSetCheck submission_set_check(std::span<const LabelRow> labels, const std::set<std::string>& predicted);

struct MetricsReport {
  std::optional<ActionAccuracy> set_model;
  std::optional<ActionAccuracy> cluster_model;
  std::optional<ValidityMetrics> validity;
  std::optional<SubmissionSetCheck> submission_set;
};

MetricsReport evaluate_against_truth(std::span<const LabelRow> labels, Platform platform,
                                     std::span<const ActionAssignment> set_assignments,
                                     std::span<const ActionAssignment> cluster_assignments,
                                     std::span<const ValidityVerdict> verdicts,
                                     const std::optional<std::set<std::string>>& submitters);

std::string metrics_to_json(const MetricsReport& report);

// Assignment CSV: voter_id,burst_index,action_id,rule. Parsing locates columns by name, so
// cluster labeling files are accepted too.
std::string write_assignments_csv(std::span<const ActionAssignment> assignments);
std::vector<ActionAssignment> parse_assignments_csv(std::string_view content);

// Verdict CSV: voter_id,verdict,basis
std::string write_verdicts_csv(std::span<const ValidityVerdict> verdicts);
std::vector<ValidityVerdict> parse_verdicts_csv(std::string_view content);

}  // namespace votetrace
