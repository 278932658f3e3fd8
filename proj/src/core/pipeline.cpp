#include "pipeline.hpp"

#include <algorithm>

#include <json.hpp>

#include "error.hpp"
#include "parallel.hpp"
#include "text.hpp"

namespace votetrace {

namespace {
constexpr const char* kModule = "pipeline";
using ojson = nlohmann::ordered_json;

std::optional<int> plurality_label(const ActivityBurst& b) {
  std::map<int, std::size_t> votes;
  for (const auto& r : b.records)
    if (r.label_action) ++votes[*r.label_action];
  std::optional<int> best;
  std::size_t count = 0;
  for (const auto& [id, c] : votes)
    if (c > count) {
      count = c;
      best = id;
    }
  return best;
}

std::vector<int> step_of(Platform platform, int action_id) {
  for (const auto& step : typical_sequence(platform))
    if (std::find(step.begin(), step.end(), action_id) != step.end()) return step;
  return {action_id};
}

ojson stage_json(const StageOutputs& s, const std::optional<MetricsReport>& metrics) {
  ojson j;
  ojson seg;
  seg["voters"] = s.seg.voters.size();
  seg["empty_flows"] = s.seg.empty_flows.size();
  seg["bursts"] = all_bursts(s.seg).size();
  seg["mean_silhouette"] = s.seg_quality.mean_silhouette;
  seg["sd_silhouette"] = s.seg_quality.sd_silhouette;
  seg["voters_scored"] = s.seg_quality.voters_scored;
  seg["noise_ratio"] = s.seg_quality.noise_ratio;
  j["segmentation"] = seg;

  ojson cat;
  cat["source"] = s.catalog_source;
  cat["actions"] = s.catalog.actions.size();
  std::vector<int> ids;
  for (const auto& a : s.catalog.actions) ids.push_back(a.action_id);
  cat["action_ids"] = ids;
  j["catalog"] = cat;

  std::size_t deviating = 0;
  for (const auto& r : s.sessions)
    if (!r.deviations.empty()) ++deviating;
  ojson st;
  st["sessions_with_deviations"] = deviating;
  st["accuracy"] = metrics && metrics->set_model ? nlohmann::ordered_json::parse(metrics_to_json(*metrics))["set_model"]
                                                  : ojson(nullptr);
  j["set_model"] = st;

  ojson cl;
  if (s.labeling) {
    cl["clusters"] = s.labeling->cluster_count;
    cl["eps"] = s.labeling->eps;
    cl["min_pts"] = s.labeling->min_pts;
    cl["silhouette"] = s.cluster_quality.silhouette ? ojson(*s.cluster_quality.silhouette) : ojson(nullptr);
    cl["noise_ratio"] = s.cluster_quality.noise_ratio;
    cl["warnings"] = s.labeling->warnings;
  } else {
    cl["error"] = s.cluster_error;
  }
  cl["accuracy"] = metrics && metrics->cluster_model
                       ? nlohmann::ordered_json::parse(metrics_to_json(*metrics))["cluster_model"]
                       : ojson(nullptr);
  j["cluster_model"] = cl;

  j["signature"] = nlohmann::ordered_json::parse(verdict_to_json(s.verdict, s.signatures));

  ojson v;
  v["mode"] = to_string(s.validity_mode);
  v["note"] = s.validity_note;
  v["rule"] = s.rule ? nlohmann::ordered_json::parse(rule_to_json(*s.rule)) : ojson(nullptr);
  std::size_t decided = 0;
  for (const auto& x : s.verdicts)
    if (x.verdict != VerdictKind::undecidable) ++decided;
  v["verdicts"] = s.verdicts.size();
  v["decided"] = decided;
  v["metrics"] = metrics && metrics->validity ? nlohmann::ordered_json::parse(metrics_to_json(*metrics))["validity"]
                                              : ojson(nullptr);
  if (s.screening) {
    ojson sc;
    sc["k"] = s.screening->k;
    sc["alpha"] = s.screening->alpha;
    sc["flagged_indices"] = s.screening->flagged_indices();
    auto& rows = sc["indices"] = ojson::array();
    for (const auto& row : s.screening->indices) {
      ojson r;
      r["packet_index"] = row.packet_index;
      r["n_a"] = row.n_a;
      r["n_b"] = row.n_b;
      r["significant_tests"] = row.significant;
      r["flagged"] = row.flagged;
      r["note"] = row.note;
      auto& tests = r["tests"] = ojson::array();
      for (const auto& t : row.reports)
        tests.push_back({{"test_name", t.test_name},
                         {"statistic", std::isfinite(t.statistic) ? ojson(t.statistic) : ojson(nullptr)},
                         {"p_value", t.p_value},
                         {"method", to_string(t.method)}});
      rows.push_back(std::move(r));
    }
    v["screening"] = sc;
  } else {
    v["screening"] = nullptr;
  }
  j["validity"] = v;

  ojson sub;
  sub["submitters"] = s.submitters.size();
  sub["check"] = metrics && metrics->submission_set
                     ? nlohmann::ordered_json::parse(metrics_to_json(*metrics))["submission_set"]
                     : ojson(nullptr);
  j["submission_set"] = sub;
  return j;
}
}  // namespace

const char* to_string(ValidityMode m) {
  switch (m) {
    case ValidityMode::automatic: return "auto";
    case ValidityMode::rule: return "rule";
    case ValidityMode::screen: return "screen";
    case ValidityMode::none: return "none";
  }
  return "none";
}

const char* to_string(CountermeasureKind k) {
  switch (k) {
    case CountermeasureKind::none: return "none";
    case CountermeasureKind::padding: return "padding";
    case CountermeasureKind::equalization: return "equalization";
  }
  return "none";
}

const ActivityBurst* StageOutputs::burst(const BurstKey& key) const {
  for (const auto& v : seg.voters) {
    if (v.voter_id != key.first) continue;
    for (const auto& b : v.bursts)
      if (b.burst_index == key.second) return &b;
  }
  return nullptr;
}

std::vector<int> reference_action_ids(std::span<const ActivityBurst> bursts) {
  std::vector<std::optional<int>> noted;
  int next = -1;
  for (const auto& b : bursts) {
    noted.push_back(plurality_label(b));
    if (noted.back()) next = std::max(next, *noted.back());
  }
  std::vector<int> ids;
  for (const auto& n : noted) ids.push_back(n ? *n : ++next);
  return ids;
}

ActionCatalog catalog_from_reference(std::span<const VoterFlow> reference, Platform platform,
                                     const SegmentOptions& segment) {
  const auto filtered = filter_analysis_population(reference);
  const auto seg = segment_corpus(filtered, segment);
  std::vector<ActivityBurst> bursts;
  for (const auto& v : seg.voters) bursts.insert(bursts.end(), v.bursts.begin(), v.bursts.end());
  if (bursts.empty()) throw Error(kModule, ErrorKind::data, "reference trace contains no activity bursts");
  const auto ids = reference_action_ids(bursts);
  return build_catalog(std::span<const ActivityBurst>(bursts), ids, platform);
}

ActionCatalog catalog_from_first_voter(const CorpusSegmentation& seg, Platform platform) {
  for (const auto& v : seg.voters)
    if (!v.bursts.empty()) return build_catalog(std::span<const ActivityBurst>(v.bursts), {}, platform);
  throw Error(kModule, ErrorKind::data, "no voter has any activity burst to learn a catalog from");
}

std::vector<ActionAssignment> cluster_assignments(const ClusterLabeling& labeling) {
  std::vector<ActionAssignment> out;
  out.reserve(labeling.entries.size());
  for (const auto& e : labeling.entries) {
    ActionAssignment a;
    a.voter_id = e.voter_id;
    a.burst_index = e.burst_index;
    a.action_id = e.action_id;
    out.push_back(std::move(a));
  }
  return out;
}

StageOutputs run_stages(std::span<const VoterFlow> flows, std::span<const VoterFlow> reference,
                        const PipelineOptions& options, const std::map<std::string, Validity>* screening_split) {
  StageOutputs s;
  SegmentOptions seg_opts = options.segment;
  seg_opts.threads = options.threads;
  const auto filtered = filter_analysis_population(flows);
  s.seg = segment_corpus(filtered, seg_opts);
  s.seg_quality = corpus_quality(s.seg);
  const auto bursts = all_bursts(s.seg);
  if (bursts.empty()) {
    s.catalog_source = "none";
    s.validity_note = "no activity bursts";
    return s;
  }

  if (!reference.empty()) {
    s.catalog = catalog_from_reference(reference, options.platform, seg_opts);
    s.catalog_source = "reference";
  } else {
    s.catalog = catalog_from_first_voter(s.seg, options.platform);
    s.catalog_source = "first_voter";
  }

  const auto expected = typical_sequence(options.platform);
  std::vector<SessionClassification> sessions(s.seg.voters.size());
  parallel_for(sessions.size(), options.threads, [&](std::size_t i) {
    sessions[i] = classify_session(s.seg.voters[i].bursts, s.catalog, expected);
  });
  for (auto& sc : sessions) {
    s.set_assignments.insert(s.set_assignments.end(), sc.assignments.begin(), sc.assignments.end());
    sc.report.voter_id = sc.report.voter_id.empty() ? std::string() : sc.report.voter_id;
    s.sessions.push_back(std::move(sc.report));
  }

  try {
    s.labeling = cluster_bursts(s.seg, options.cluster);
    anchor_clusters(*s.labeling, s.set_assignments);
    s.cluster_quality = cluster_quality(*s.labeling);
    s.cluster_assignments = cluster_assignments(*s.labeling);
  } catch (const Error& e) {
    s.labeling.reset();
    s.cluster_error = e.code() + ": " + e.what();
  }
  const auto& primary = s.labeling ? s.cluster_assignments : s.set_assignments;

  const auto groups = group_by_action(s.seg, primary);
  s.signatures = build_signatures(groups, options.signature);
  s.verdict = detect_submission(s.signatures, options.signature);

  // Submission step: the detected action's step, else the platform's.
  std::vector<int> sub_ids = s.verdict.detected_action_id ? step_of(options.platform, *s.verdict.detected_action_id)
                                                          : submission_action_ids(options.platform);
  for (const auto& a : primary) {
    if (std::find(sub_ids.begin(), sub_ids.end(), a.action_id) == sub_ids.end()) continue;
    s.submitters.insert(a.voter_id);
    s.submission_bursts.emplace_back(a.voter_id, a.burst_index);
  }

  // Validity.
  std::vector<SubmissionCluster> clusters;
  for (int id : sub_ids) {
    SubmissionCluster c;
    c.action_id = id;
    for (const auto& a : primary)
      if (a.action_id == id)
        if (const auto* b = s.burst({a.voter_id, a.burst_index})) c.bursts.push_back(b);
    if (!c.bursts.empty()) clusters.push_back(std::move(c));
  }
  ValidityMode mode = options.validity;
  if (mode == ValidityMode::automatic || mode == ValidityMode::rule) {
    try {
      s.rule = derive_payload_rule(clusters, options.signature);
      s.validity_mode = ValidityMode::rule;
    } catch (const Error& e) {
      s.validity_note = e.what();
      if (mode == ValidityMode::rule) s.validity_mode = ValidityMode::rule;
      else mode = ValidityMode::screen;
    }
  }
  std::vector<std::string> voter_order;
  for (const auto& v : s.seg.voters) voter_order.push_back(v.voter_id);
  for (const auto& id : s.seg.empty_flows) voter_order.push_back(id);
  if (options.validity != ValidityMode::none) {
    std::map<std::string, ValidityVerdict> by_voter;
    if (s.rule) {
      for (const auto& key : s.submission_bursts) {
        auto& current = by_voter[key.first];
        if (current.verdict != VerdictKind::undecidable) continue;
        current = classify_validity_by_rule(key.first, s.burst(key)->payload_set, *s.rule);
      }
    }
    for (const auto& id : voter_order) {
      auto v = by_voter[id];
      v.voter_id = id;
      s.verdicts.push_back(v);
    }
  }
  if (mode == ValidityMode::screen) {
    s.validity_mode = ValidityMode::screen;
    if (!screening_split) {
      if (!s.validity_note.empty()) s.validity_note += "; ";
      s.validity_note += "screening needs a group split";
    } else {
      std::vector<const ActivityBurst*> ga, gb;
      for (const auto& key : s.submission_bursts) {
        const auto it = screening_split->find(key.first);
        if (it == screening_split->end()) continue;
        (it->second == Validity::valid ? ga : gb).push_back(s.burst(key));
      }
      ScreeningOptions so = options.screening;
      so.threads = options.threads;
      s.screening = screen_timing_leakage(ga, gb, so);
    }
  }
  return s;
}

std::vector<LabelRow> labels_from_trace(const CorpusSegmentation& seg) {
  std::vector<LabelRow> out;
  for (const auto& v : seg.voters) {
    std::optional<Validity> validity;
    for (const auto& b : v.bursts)
      for (const auto& r : b.records)
        if (r.label_validity) validity = r.label_validity;
    for (const auto& b : v.bursts) {
      const auto label = plurality_label(b);
      if (!label) continue;
      out.push_back({v.voter_id, b.burst_index, *label, validity});
    }
  }
  return out;
}

MetricsReport stage_metrics(const StageOutputs& stages, std::span<const LabelRow> labels, Platform platform) {
  if (labels.empty()) return {};
  return evaluate_against_truth(labels, platform, stages.set_assignments, stages.cluster_assignments,
                                stages.validity_mode == ValidityMode::rule
                                    ? std::span<const ValidityVerdict>(stages.verdicts)
                                            : std::span<const ValidityVerdict>(),
                                stages.submitters);
}

AttackEvalResult attack_eval(std::span<const VoterFlow> flows, std::span<const LabelRow> labels,
                             std::span<const VoterFlow> reference, const PipelineOptions& options,
                             const CountermeasureConfig& countermeasure) {
  AttackEvalResult r;
  r.platform = options.platform;
  r.voters = flows.size();
  r.countermeasure = countermeasure.kind;

  std::vector<LabelRow> truth(labels.begin(), labels.end());
  if (truth.empty()) {
    SegmentOptions so = options.segment;
    so.threads = options.threads;
    truth = labels_from_trace(segment_corpus(filter_analysis_population(flows), so));
  }
  const auto split = voter_validity(truth);
  r.before = run_stages(flows, reference, options, &split);
  r.metrics_before = stage_metrics(r.before, truth, options.platform);
  // A rule learned on the original is kept for the transformed corpus.
  PipelineOptions after_options = options;
  if (r.before.validity_mode == ValidityMode::rule) after_options.validity = ValidityMode::rule;

  if (countermeasure.kind == CountermeasureKind::padding) {
    auto padded = apply_padding(flows, countermeasure.padding);
    auto padded_ref = apply_padding(reference, countermeasure.padding);
    r.padding = padded.report;
    r.after = run_stages(padded.flows, padded_ref.flows, after_options, &split);
  } else if (countermeasure.kind == CountermeasureKind::equalization) {
    // The defender knows its own action boundaries and kinds.
    auto action_of = [](const ActivityBurst& b) { return plurality_label(b).value_or(kUnknownAction); };
    std::int64_t max_len = 0;
    const auto& seg = r.before.seg;
    const auto baseline = baseline_from_max_length(seg, &max_len);
    auto eq = apply_time_equalization(seg, baseline, countermeasure.seed, action_of);
    eq.report.baseline_payload_len = max_len;
    r.equalization = eq.report;
    std::vector<VoterFlow> eq_ref;
    if (!reference.empty()) {
      SegmentOptions so = options.segment;
      so.threads = options.threads;
      const auto ref_seg = segment_corpus(filter_analysis_population(reference), so);
      eq_ref = apply_time_equalization(ref_seg, baseline, splitmix64(countermeasure.seed), action_of).flows;
    }
    r.after = run_stages(eq.flows, eq_ref, after_options, &split);
  }
  if (r.after) r.metrics_after = stage_metrics(*r.after, truth, options.platform);
  r.labels = std::move(truth);
  return r;
}

std::string attack_report_json(const AttackEvalResult& result) {
  ojson j;
  j["platform"] = to_string(result.platform);
  j["voters"] = result.voters;
  j["labeled_bursts"] = result.labels.size();
  j["before"] = stage_json(result.before, result.metrics_before);
  j["countermeasure"] = to_string(result.countermeasure);
  if (result.after) {
    j["after"] = stage_json(*result.after, result.metrics_after);
    if (result.padding) j["overhead"] = ojson::parse(padding_report_json(*result.padding));
    if (result.equalization) j["overhead"] = ojson::parse(equalization_report_json(*result.equalization));
  } else {
    j["after"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string export_submission_iats(const StageOutputs& stages, std::span<const LabelRow> labels) {
  const auto truth = voter_validity(labels);
  std::string out = "voter_id,index,iat,label\n";
  for (const auto& key : stages.submission_bursts) {
    const auto* b = stages.burst(key);
    const auto it = truth.find(key.first);
    const std::string label = it == truth.end() ? std::string() : to_string(it->second);
    for (std::size_t k = 1; k < b->records.size(); ++k)
      out += text::csv_escape(key.first) + "," + std::to_string(k) + "," +
             text::format_double(b->records[k].ts - b->records[k - 1].ts) + "," + label + "\n";
  }
  return out;
}

}  // namespace votetrace
