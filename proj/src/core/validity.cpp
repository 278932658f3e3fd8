#include "validity.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "error.hpp"
#include "parallel.hpp"
#include "text.hpp"

namespace votetrace {

namespace {
constexpr const char* kModule = "validity";

std::vector<PayloadSet> distinct_sets(const SubmissionCluster& cluster) {
  std::set<PayloadSet> sets;
  for (const auto* b : cluster.bursts) sets.insert(b->payload_set);
  return {sets.begin(), sets.end()};
}

PayloadSet family_union(const std::vector<PayloadSet>& family) {
  PayloadSet out;
  for (const auto& s : family) out = set_union(out, s);
  return out;
}

double cluster_jump(const SubmissionCluster& cluster, const SignatureOptions& options) {
  std::set<std::string> voters;
  for (const auto* b : cluster.bursts) voters.insert(b->voter_id);
  if (voters.size() < 2) return 0.0;
  return build_signature(cluster.bursts, cluster.action_id, options).jump_score;
}
}  // namespace

const char* to_string(VerdictKind v) {
  switch (v) {
    case VerdictKind::valid: return "valid";
    case VerdictKind::spoiled: return "spoiled";
    case VerdictKind::undecidable: return "undecidable";
  }
  return "undecidable";
}

const char* to_string(VerdictBasis b) {
  switch (b) {
    case VerdictBasis::payload_rule: return "payload_rule";
    case VerdictBasis::statistical: return "statistical";
    case VerdictBasis::none: return "none";
  }
  return "none";
}

ValidityRule derive_payload_rule(std::span<const SubmissionCluster> clusters, const SignatureOptions& options) {
  if (clusters.size() != 2)
    throw Error(kModule, ErrorKind::data,
                "payload rule not derivable; platform may be polyas_like (found " + std::to_string(clusters.size()) +
                    " submission cluster" + (clusters.size() == 1 ? "" : "s") + ", need 2; use --mode screen)");
  auto fam0 = distinct_sets(clusters[0]);
  auto fam1 = distinct_sets(clusters[1]);
  if (fam0.empty() || fam1.empty()) throw Error(kModule, ErrorKind::data, "payload rule not derivable; empty submission cluster");
  for (const auto& s : fam0)
    if (std::binary_search(fam1.begin(), fam1.end(), s))
      throw Error(kModule, ErrorKind::data, "payload rule not derivable; submission clusters share payload set {" +
                                                join_payload_set(s) + "}");

  const double j0 = cluster_jump(clusters[0], options);
  const double j1 = cluster_jump(clusters[1], options);
  if (j0 == j1)
    throw Error(kModule, ErrorKind::data, "payload rule not derivable; submission clusters have equal jump scores");
  const bool first_valid = j0 > j1;

  ValidityRule rule;
  const auto& v = first_valid ? clusters[0] : clusters[1];
  const auto& s = first_valid ? clusters[1] : clusters[0];
  rule.valid_action_id = v.action_id;
  rule.spoiled_action_id = s.action_id;
  rule.valid_sets = first_valid ? fam0 : fam1;
  rule.spoiled_sets = first_valid ? fam1 : fam0;
  rule.valid_jump = first_valid ? j0 : j1;
  rule.spoiled_jump = first_valid ? j1 : j0;
  const auto uv = family_union(rule.valid_sets);
  const auto us = family_union(rule.spoiled_sets);
  rule.valid_distinctive = set_difference(uv, us);
  rule.spoiled_distinctive = set_difference(us, uv);
  return rule;
}

ValidityVerdict classify_validity_by_rule(const std::string& voter_id, const PayloadSet& submission_set,
                                          const ValidityRule& rule) {
  ValidityVerdict out;
  out.voter_id = voter_id;
  const bool in_valid = std::binary_search(rule.valid_sets.begin(), rule.valid_sets.end(), submission_set);
  const bool in_spoiled = std::binary_search(rule.spoiled_sets.begin(), rule.spoiled_sets.end(), submission_set);
  bool valid = in_valid, spoiled = in_spoiled;
  if (!in_valid && !in_spoiled) {
    valid = intersects(submission_set, rule.valid_distinctive);
    spoiled = intersects(submission_set, rule.spoiled_distinctive);
  }
  if (valid != spoiled) {
    out.verdict = valid ? VerdictKind::valid : VerdictKind::spoiled;
    out.basis = VerdictBasis::payload_rule;
  }
  return out;
}

std::string rule_to_json(const ValidityRule& rule) {
  nlohmann::ordered_json j;
  j["valid_action_id"] = rule.valid_action_id;
  j["spoiled_action_id"] = rule.spoiled_action_id;
  j["valid_payload_sets"] = rule.valid_sets;
  j["spoiled_payload_sets"] = rule.spoiled_sets;
  j["valid_distinctive"] = rule.valid_distinctive;
  j["spoiled_distinctive"] = rule.spoiled_distinctive;
  j["valid_jump_score"] = rule.valid_jump;
  j["spoiled_jump_score"] = rule.spoiled_jump;
  return j.dump(2) + "\n";
}

std::vector<std::size_t> ScreeningReport::flagged_indices() const {
  std::vector<std::size_t> out;
  for (const auto& i : indices)
    if (i.flagged) out.push_back(i.packet_index);
  return out;
}

std::vector<double> iats_at_index(std::span<const ActivityBurst* const> bursts, std::size_t index) {
  std::vector<double> out;
  if (index == 0) return out;
  for (const auto* b : bursts)
    if (index < b->records.size()) out.push_back(b->records[index].ts - b->records[index - 1].ts);
  return out;
}

ScreeningReport screen_timing_leakage(std::span<const ActivityBurst* const> group_a,
                                      std::span<const ActivityBurst* const> group_b, const ScreeningOptions& options) {
  if (options.index_lo == 0 || options.index_hi < options.index_lo)
    throw Error(kModule, ErrorKind::usage, "packet index range must satisfy 1 <= lo <= hi");
  if (options.k == 0 || options.k > screening_tests().size())
    throw Error(kModule, ErrorKind::usage, "k must be between 1 and the number of screening tests");
  ScreeningReport report;
  report.alpha = options.alpha;
  report.k = options.k;
  const std::size_t count = options.index_hi - options.index_lo + 1;
  report.indices.resize(count);
  std::vector<std::vector<double>> sa(count), sb(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& row = report.indices[i];
    row.packet_index = options.index_lo + i;
    sa[i] = iats_at_index(group_a, row.packet_index);
    sb[i] = iats_at_index(group_b, row.packet_index);
    row.n_a = sa[i].size();
    row.n_b = sb[i].size();
    if (row.n_a < options.min_group || row.n_b < options.min_group) {
      row.note = "skipped: group size below " + std::to_string(options.min_group);
      continue;
    }
    if (std::min(row.n_a, row.n_b) < 5 && binomial(row.n_a + row.n_b, row.n_a) > options.tests.exact_limit) {
      row.note = "skipped: too large for exact and too small for asymptotic tests";
      continue;
    }
    row.reports.resize(screening_tests().size());
  }
  const auto tests = screening_tests();
  parallel_for(count * tests.size(), options.threads, [&](std::size_t job) {
    auto& row = report.indices[job / tests.size()];
    if (row.reports.empty()) return;
    const std::size_t t = job % tests.size();
    row.reports[t] = run_test(tests[t], sa[job / tests.size()], sb[job / tests.size()], options.tests);
  });
  for (auto& row : report.indices) {
    for (const auto& r : row.reports)
      if (r.p_value < options.alpha) ++row.significant;
    row.flagged = !row.reports.empty() && row.significant >= options.k;
  }
  return report;
}

std::string write_screening_csv(const ScreeningReport& report) {
  std::string out = "packet_index,test_name,statistic,p_value,significant\n";
  for (const auto& row : report.indices) {
    for (const auto& r : row.reports) {
      out += std::to_string(row.packet_index) + "," + r.test_name + "," + text::format_double(r.statistic) + "," +
             text::format_double(r.p_value) + "," + (r.p_value < report.alpha ? "true" : "false") + "\n";
    }
  }
  return out;
}

}  // namespace votetrace
