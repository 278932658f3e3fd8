#include "votetrace/votetrace.h"

#include <cstdlib>
#include <cstring>
#include <map>
#include <new>
#include <string>

#include <json.hpp>

#include "clustermodel.hpp"
#include "countermeasure.hpp"
#include "error.hpp"
#include "evaluate.hpp"
#include "pipeline.hpp"
#include "segment.hpp"
#include "setmodel.hpp"
#include "signature.hpp"
#include "stattests.hpp"
#include "synth.hpp"
#include "text.hpp"
#include "trace.hpp"
#include "validity.hpp"

struct vt_corpus {
  std::vector<votetrace::VoterFlow> flows;
  std::vector<votetrace::LabelRow> labels;
};

struct vt_segmentation {
  votetrace::CorpusSegmentation seg;
};

struct vt_catalog {
  votetrace::ActionCatalog catalog;
};

namespace {

using namespace votetrace;
using ojson = nlohmann::ordered_json;
constexpr const char* kModule = "capi";

thread_local std::string g_message;
thread_local std::string g_code;

vt_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return VT_ERR_USAGE;
    case ErrorKind::io: return VT_ERR_IO;
    case ErrorKind::parse: return VT_ERR_PARSE;
    case ErrorKind::data: return VT_ERR_DATA;
    case ErrorKind::internal: return VT_ERR_INTERNAL;
  }
  return VT_ERR_INTERNAL;
}

vt_status fail(vt_status s, std::string code, std::string message) {
  g_code = std::move(code);
  g_message = std::move(message);
  return s;
}

template <class Fn>
vt_status guarded(Fn&& fn) {
  try {
    fn();
    g_code.clear();
    g_message.clear();
    return VT_OK;
  } catch (const Error& e) {
    return fail(status_of(e.kind()), e.code(), e.what());
  } catch (const std::bad_alloc&) {
    return fail(VT_ERR_INTERNAL, "capi.internal", "out of memory");
  } catch (const std::exception& e) {
    return fail(VT_ERR_INTERNAL, "capi.internal", e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(kModule, ErrorKind::usage, what);
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size());
  p[s.size()] = '\0';
  return p;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

Platform platform_of(const char* name) {
  require(name != nullptr, "platform must not be null");
  const auto p = parse_platform(name);
  if (!p) throw Error(kModule, ErrorKind::usage, std::string("unknown platform '") + name + "'");
  return *p;
}

SegmentOptions segment_options(const vt_segment_options* o) {
  vt_segment_options d;
  vt_segment_options_init(&d);
  if (!o) o = &d;
  SegmentOptions s;
  if (o->eps > 0.0) s.eps = o->eps;
  s.min_pts = o->min_pts;
  s.threads = o->threads;
  require(s.min_pts >= 1, "min_pts must be at least 1");
  return s;
}

ClusterOptions cluster_options(const vt_cluster_options* o) {
  vt_cluster_options d;
  vt_cluster_options_init(&d);
  if (!o) o = &d;
  ClusterOptions c;
  if (o->eps > 0.0) c.eps = o->eps;
  c.min_pts = o->min_pts;
  require(c.min_pts >= 1, "cluster min_pts must be at least 1");
  return c;
}

SignatureOptions signature_options(const vt_signature_options* o) {
  vt_signature_options d;
  vt_signature_options_init(&d);
  if (!o) o = &d;
  SignatureOptions s;
  s.window = o->window;
  s.length = o->length;
  s.central_lo = o->central_lo;
  s.central_hi = o->central_hi;
  s.threshold = o->threshold;
  require(s.window >= 1 && s.length >= 2, "signature window must be >= 1 and length >= 2");
  require(s.central_lo >= 0.0 && s.central_lo < s.central_hi && s.central_hi <= 1.0,
          "central window must satisfy 0 <= lo < hi <= 1");
  return s;
}

ScreeningOptions screening_options(const vt_screen_options* o) {
  vt_screen_options d;
  vt_screen_options_init(&d);
  if (!o) o = &d;
  ScreeningOptions s;
  s.index_lo = o->index_lo;
  s.index_hi = o->index_hi;
  s.k = o->k;
  s.alpha = o->alpha;
  s.tests.exact_limit = o->exact_limit;
  s.threads = o->threads;
  require(s.alpha > 0.0 && s.alpha < 1.0, "alpha must be in (0, 1)");
  return s;
}

std::vector<const ActivityBurst*> submission_bursts(const CorpusSegmentation& seg,
                                                    const std::vector<ActionAssignment>& assignments, int action_id) {
  std::map<std::pair<std::string, std::size_t>, const ActivityBurst*> index;
  for (const auto& v : seg.voters)
    for (const auto& b : v.bursts) index[{v.voter_id, b.burst_index}] = &b;
  std::vector<const ActivityBurst*> out;
  for (const auto& a : assignments) {
    if (a.action_id != action_id) continue;
    const auto it = index.find({a.voter_id, a.burst_index});
    if (it != index.end()) out.push_back(it->second);
  }
  return out;
}

}  // namespace

extern "C" {

const char* vt_last_error(void) { return g_message.c_str(); }
const char* vt_last_error_code(void) { return g_code.c_str(); }
const char* vt_version(void) { return "0.1.0"; }
void vt_string_free(char* s) { std::free(s); }

void vt_generate_options_init(vt_generate_options* o) {
  if (!o) return;
  o->n_voters = 200;
  o->valid_fraction = 0.5;
  o->seed = 1;
  o->abandon_fraction = 0.0;
  o->divergence = 1;
  o->sigma_factor = 0.0;
  o->threads = 0;
}

vt_status vt_corpus_generate(const char* profile, const vt_generate_options* o, vt_corpus** out) {
  return guarded([&] {
    require(profile && out, "profile and out must not be null");
    vt_generate_options d;
    vt_generate_options_init(&d);
    if (!o) o = &d;
    const auto p = load_profile(profile);
    CorpusSpec spec;
    spec.n_voters = o->n_voters;
    spec.valid_fraction = o->valid_fraction;
    spec.seed = o->seed;
    spec.abandon_fraction = o->abandon_fraction;
    spec.divergence = o->divergence != 0;
    if (o->sigma_factor > 0.0) spec.sigma_factor = o->sigma_factor;
    spec.threads = o->threads;
    auto corpus = generate_corpus(p, spec);
    auto* c = new vt_corpus{std::move(corpus.flows), std::move(corpus.labels)};
    *out = c;
  });
}

vt_status vt_corpus_load(const char* path, vt_corpus** out) {
  return guarded([&] {
    require(path && out, "path and out must not be null");
    auto flows = load_trace(path, format_from_path(path));
    *out = new vt_corpus{std::move(flows), {}};
  });
}

vt_status vt_corpus_attach_labels(vt_corpus* c, const char* labels_path) {
  return guarded([&] {
    require(c && labels_path, "corpus and path must not be null");
    c->labels = parse_labels_csv(text::read_file(labels_path, "synth"));
  });
}

size_t vt_corpus_voter_count(const vt_corpus* c) { return c ? c->flows.size() : 0; }

vt_status vt_corpus_trace_csv(const vt_corpus* c, char** out) {
  return guarded([&] {
    require(c && out, "corpus and out must not be null");
    put(out, write_trace_csv(c->flows));
  });
}

vt_status vt_corpus_labels_csv(const vt_corpus* c, char** out) {
  return guarded([&] {
    require(c && out, "corpus and out must not be null");
    put(out, write_labels_csv(c->labels));
  });
}

void vt_corpus_free(vt_corpus* c) { delete c; }

void vt_segment_options_init(vt_segment_options* o) {
  if (!o) return;
  o->eps = 0.0;
  o->min_pts = 2;
  o->threads = 0;
}

vt_status vt_segment(const vt_corpus* c, const vt_segment_options* o, vt_segmentation** out) {
  return guarded([&] {
    require(c && out, "corpus and out must not be null");
    const auto filtered = filter_analysis_population(c->flows);
    *out = new vt_segmentation{segment_corpus(filtered, segment_options(o))};
  });
}

vt_status vt_segmentation_bursts_csv(const vt_segmentation* s, char** out) {
  return guarded([&] {
    require(s && out, "segmentation and out must not be null");
    put(out, write_burst_csv(s->seg));
  });
}

vt_status vt_segmentation_quality(const vt_segmentation* s, vt_segment_quality* out) {
  return guarded([&] {
    require(s && out, "segmentation and out must not be null");
    const auto q = corpus_quality(s->seg);
    out->mean_silhouette = q.mean_silhouette;
    out->sd_silhouette = q.sd_silhouette;
    out->voters_scored = q.voters_scored;
    out->noise_ratio = q.noise_ratio;
    out->bursts = all_bursts(s->seg).size();
    out->empty_flows = s->seg.empty_flows.size();
  });
}

void vt_segmentation_free(vt_segmentation* s) { delete s; }

vt_status vt_catalog_from_reference(const vt_corpus* reference, const char* platform, const vt_segment_options* o,
                                    vt_catalog** out) {
  return guarded([&] {
    require(reference && out, "reference and out must not be null");
    *out = new vt_catalog{catalog_from_reference(reference->flows, platform_of(platform), segment_options(o))};
  });
}

vt_status vt_catalog_from_first_voter(const vt_segmentation* s, const char* platform, vt_catalog** out) {
  return guarded([&] {
    require(s && out, "segmentation and out must not be null");
    *out = new vt_catalog{catalog_from_first_voter(s->seg, platform_of(platform))};
  });
}

vt_status vt_catalog_from_json(const char* json, vt_catalog** out) {
  return guarded([&] {
    require(json && out, "json and out must not be null");
    *out = new vt_catalog{catalog_from_json(json)};
  });
}

vt_status vt_catalog_to_json(const vt_catalog* c, char** out) {
  return guarded([&] {
    require(c && out, "catalog and out must not be null");
    put(out, catalog_to_json(c->catalog));
  });
}

void vt_catalog_free(vt_catalog* c) { delete c; }

vt_status vt_classify_set(const vt_segmentation* s, const vt_catalog* c, char** assignments_csv,
                          char** sessions_json) {
  return guarded([&] {
    require(s && c, "segmentation and catalog must not be null");
    const auto expected = typical_sequence(c->catalog.platform);
    std::vector<ActionAssignment> all;
    ojson sessions = ojson::array();
    std::size_t deviating = 0;
    for (const auto& v : s->seg.voters) {
      auto sc = classify_session(v.bursts, c->catalog, expected);
      all.insert(all.end(), sc.assignments.begin(), sc.assignments.end());
      if (!sc.report.deviations.empty()) ++deviating;
      sessions.push_back({{"voter_id", v.voter_id},
                          {"sequence", sc.report.sequence},
                          {"unclassifiable", sc.report.unclassifiable},
                          {"deviations", sc.report.deviations}});
    }
    ojson j;
    j["platform"] = to_string(c->catalog.platform);
    j["sessions_with_deviations"] = deviating;
    j["sessions"] = std::move(sessions);
    put(assignments_csv, write_assignments_csv(all));
    put(sessions_json, j.dump(2) + "\n");
  });
}

void vt_cluster_options_init(vt_cluster_options* o) {
  if (!o) return;
  o->eps = 0.0;
  o->min_pts = 5;
}

vt_status vt_classify_cluster(const vt_segmentation* s, const vt_catalog* c, const vt_cluster_options* o,
                              char** labeling_csv, char** quality_json) {
  return guarded([&] {
    require(s != nullptr, "segmentation must not be null");
    auto labeling = cluster_bursts(s->seg, cluster_options(o));
    if (c) anchor_clusters(labeling, s->seg, c->catalog);
    const auto q = cluster_quality(labeling);
    ojson j;
    j["clusters"] = labeling.cluster_count;
    j["eps"] = labeling.eps;
    j["min_pts"] = labeling.min_pts;
    j["silhouette"] = q.silhouette ? ojson(*q.silhouette) : ojson(nullptr);
    j["noise_ratio"] = q.noise_ratio;
    j["warnings"] = labeling.warnings;
    auto& anchors = j["anchors"] = ojson::array();
    for (const auto& [cluster, ap] : labeling.cluster_actions)
      anchors.push_back({{"cluster_id", cluster}, {"action_id", ap.first}, {"purity", ap.second}});
    put(labeling_csv, write_labeling_csv(labeling));
    put(quality_json, j.dump(2) + "\n");
  });
}

void vt_signature_options_init(vt_signature_options* o) {
  if (!o) return;
  const SignatureOptions d;
  o->window = d.window;
  o->length = d.length;
  o->central_lo = d.central_lo;
  o->central_hi = d.central_hi;
  o->threshold = d.threshold;
}

vt_status vt_signature(const vt_segmentation* s, const char* assignments_csv, const vt_signature_options* o,
                       char** curves_csv, char** verdict_json) {
  return guarded([&] {
    require(s && assignments_csv, "segmentation and assignments must not be null");
    const auto opts = signature_options(o);
    const auto assignments = parse_assignments_csv(assignments_csv);
    const auto sigs = build_signatures(group_by_action(s->seg, assignments), opts);
    const auto verdict = detect_submission(sigs, opts);
    put(curves_csv, write_curves_csv(sigs));
    put(verdict_json, verdict_to_json(verdict, sigs));
  });
}

vt_status vt_validity_rule(const vt_segmentation* s, const char* assignments_csv, const char* platform,
                           const vt_signature_options* o, char** verdicts_csv, char** rule_json) {
  return guarded([&] {
    require(s && assignments_csv, "segmentation and assignments must not be null");
    const auto plat = platform_of(platform);
    const auto assignments = parse_assignments_csv(assignments_csv);
    std::vector<SubmissionCluster> clusters;
    for (int id : submission_action_ids(plat)) {
      SubmissionCluster c{id, submission_bursts(s->seg, assignments, id)};
      if (!c.bursts.empty()) clusters.push_back(std::move(c));
    }
    const auto rule = derive_payload_rule(clusters, signature_options(o));
    std::map<std::string, ValidityVerdict> by_voter;
    for (const auto& c : clusters)
      for (const auto* b : c.bursts) {
        auto& cur = by_voter[b->voter_id];
        if (cur.verdict == VerdictKind::undecidable) cur = classify_validity_by_rule(b->voter_id, b->payload_set, rule);
      }
    std::vector<ValidityVerdict> verdicts;
    auto emit = [&](const std::string& id) {
      auto v = by_voter[id];
      v.voter_id = id;
      verdicts.push_back(v);
    };
    for (const auto& v : s->seg.voters) emit(v.voter_id);
    for (const auto& id : s->seg.empty_flows) emit(id);
    put(verdicts_csv, write_verdicts_csv(verdicts));
    put(rule_json, rule_to_json(rule));
  });
}

void vt_screen_options_init(vt_screen_options* o) {
  if (!o) return;
  const ScreeningOptions d;
  o->index_lo = d.index_lo;
  o->index_hi = d.index_hi;
  o->k = d.k;
  o->alpha = d.alpha;
  o->exact_limit = d.tests.exact_limit;
  o->threads = 0;
}

vt_status vt_validity_screen(const vt_segmentation* s, const char* assignments_csv, const char* split_csv,
                             const char* platform, const vt_screen_options* o, char** screening_csv,
                             char** summary_json) {
  return guarded([&] {
    require(s && assignments_csv && split_csv, "segmentation, assignments and split must not be null");
    const auto plat = platform_of(platform);
    const auto assignments = parse_assignments_csv(assignments_csv);

    const auto lines = text::split_lines(split_csv);
    if (lines.empty() || text::trim(lines[0]) != "voter_id,group")
      throw Error("validity", ErrorKind::parse, "split file must start with header voter_id,group");
    std::map<std::string, std::string> group_of;
    std::vector<std::string> groups;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (text::trim(lines[i]).empty()) continue;
      const auto f = text::split_csv_line(lines[i]);
      if (f.size() != 2 || f[0].empty() || text::trim(f[1]).empty())
        throw Error("validity", ErrorKind::parse, "split line " + std::to_string(i + 1) + ": bad row");
      const auto g = text::trim(f[1]);
      group_of[f[0]] = g;
      if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
    }
    if (groups.size() != 2)
      throw Error("validity", ErrorKind::data, "split file must name exactly two groups");

    std::vector<const ActivityBurst*> ga, gb;
    for (int id : submission_action_ids(plat))
      for (const auto* b : submission_bursts(s->seg, assignments, id)) {
        const auto it = group_of.find(b->voter_id);
        if (it == group_of.end()) continue;
        (it->second == groups[0] ? ga : gb).push_back(b);
      }
    const auto report = screen_timing_leakage(ga, gb, screening_options(o));
    ojson j;
    j["group_a"] = groups[0];
    j["group_b"] = groups[1];
    j["k"] = report.k;
    j["alpha"] = report.alpha;
    j["flagged_indices"] = report.flagged_indices();
    auto& rows = j["indices"] = ojson::array();
    for (const auto& r : report.indices)
      rows.push_back({{"packet_index", r.packet_index},
                      {"n_a", r.n_a},
                      {"n_b", r.n_b},
                      {"significant_tests", r.significant},
                      {"flagged", r.flagged},
                      {"note", r.note}});
    put(screening_csv, write_screening_csv(report));
    put(summary_json, j.dump(2) + "\n");
  });
}

vt_status vt_stattest(const char* test_name, const double* a, size_t n1, const double* b, size_t n2,
                      uint64_t exact_limit, vt_test_report* out) {
  return guarded([&] {
    require(test_name && out && (a || n1 == 0) && (b || n2 == 0), "null argument");
    const auto kind = parse_test_kind(test_name);
    if (!kind) throw Error("stattests", ErrorKind::usage, std::string("unknown test '") + test_name + "'");
    TestOptions opts;
    opts.exact_limit = exact_limit;
    const auto r = run_test(*kind, std::span<const double>(a, n1), std::span<const double>(b, n2), opts);
    std::memset(out->test_name, 0, sizeof out->test_name);
    std::strncpy(out->test_name, r.test_name.c_str(), sizeof out->test_name - 1);
    out->statistic = r.statistic;
    out->p_value = r.p_value;
    out->method = r.method == TestMethod::exact_permutation ? VT_METHOD_EXACT : VT_METHOD_ASYMPTOTIC;
    out->n1 = r.n1;
    out->n2 = r.n2;
  });
}

size_t vt_stattest_count(void) { return all_tests().size(); }

const char* vt_stattest_name(size_t i) { return i < all_tests().size() ? test_name(all_tests()[i]) : nullptr; }

vt_status vt_pad(const vt_corpus* c, int64_t target_len, vt_corpus** out, char** report_json) {
  return guarded([&] {
    require(c && out, "corpus and out must not be null");
    auto r = apply_padding(c->flows, PaddingPolicy{target_len});
    put(report_json, padding_report_json(r.report));
    *out = new vt_corpus{std::move(r.flows), c->labels};
  });
}

vt_status vt_equalize(const vt_corpus* c, const vt_segment_options* o, uint64_t seed, const char* assignments_csv,
                      vt_corpus** out, char** report_json) {
  return guarded([&] {
    require(c && out, "corpus and out must not be null");
    const auto seg = segment_corpus(filter_analysis_population(c->flows), segment_options(o));
    std::map<std::pair<std::string, std::size_t>, int> action;
    if (assignments_csv)
      for (const auto& a : parse_assignments_csv(assignments_csv)) action[{a.voter_id, a.burst_index}] = a.action_id;
    auto action_of = [&](const ActivityBurst& b) {
      const auto it = action.find({b.voter_id, b.burst_index});
      return it == action.end() ? kUnknownAction : it->second;
    };
    std::int64_t max_len = 0;
    const auto baseline = baseline_from_max_length(seg, &max_len);
    auto r = apply_time_equalization(seg, baseline, seed, action_of);
    r.report.baseline_payload_len = max_len;
    put(report_json, equalization_report_json(r.report));
    *out = new vt_corpus{std::move(r.flows), c->labels};
  });
}

vt_status vt_evaluate(const char* labels_csv, const char* platform, const char* set_assignments_csv,
                      const char* cluster_assignments_csv, const char* verdicts_csv, char** metrics_json) {
  return guarded([&] {
    require(labels_csv && metrics_json, "labels and out must not be null");
    const auto labels = parse_labels_csv(labels_csv);
    const auto plat = platform_of(platform);
    std::vector<ActionAssignment> set_a, cl_a;
    std::vector<ValidityVerdict> verdicts;
    if (set_assignments_csv) set_a = parse_assignments_csv(set_assignments_csv);
    if (cluster_assignments_csv) cl_a = parse_assignments_csv(cluster_assignments_csv);
    if (verdicts_csv) verdicts = parse_verdicts_csv(verdicts_csv);
    const auto m = evaluate_against_truth(labels, plat, set_a, cl_a, verdicts, std::nullopt);
    put(metrics_json, metrics_to_json(m));
  });
}

void vt_attack_options_init(vt_attack_options* o) {
  if (!o) return;
  o->platform = "eligo";
  vt_segment_options_init(&o->segment);
  vt_cluster_options_init(&o->cluster);
  vt_signature_options_init(&o->signature);
  vt_screen_options_init(&o->screen);
  o->validity = VT_VALIDITY_AUTO;
  o->countermeasure = VT_CM_NONE;
  o->pad_target = kDefaultPadTarget;
  o->seed = 1;
  o->threads = 0;
}

vt_status vt_attack_eval(const vt_corpus* c, const vt_corpus* reference, const vt_attack_options* o,
                         char** report_json, char** iat_csv) {
  return guarded([&] {
    require(c && report_json, "corpus and out must not be null");
    vt_attack_options d;
    vt_attack_options_init(&d);
    if (!o) o = &d;
    PipelineOptions p;
    p.platform = platform_of(o->platform);
    p.segment = segment_options(&o->segment);
    p.cluster = cluster_options(&o->cluster);
    p.signature = signature_options(&o->signature);
    p.screening = screening_options(&o->screen);
    switch (o->validity) {
      case VT_VALIDITY_AUTO: p.validity = ValidityMode::automatic; break;
      case VT_VALIDITY_RULE: p.validity = ValidityMode::rule; break;
      case VT_VALIDITY_SCREEN: p.validity = ValidityMode::screen; break;
      case VT_VALIDITY_NONE: p.validity = ValidityMode::none; break;
      default: throw Error(kModule, ErrorKind::usage, "unknown validity mode");
    }
    p.threads = o->threads;
    CountermeasureConfig cm;
    switch (o->countermeasure) {
      case VT_CM_NONE: cm.kind = CountermeasureKind::none; break;
      case VT_CM_PAD: cm.kind = CountermeasureKind::padding; break;
      case VT_CM_EQUALIZE: cm.kind = CountermeasureKind::equalization; break;
      default: throw Error(kModule, ErrorKind::usage, "unknown countermeasure");
    }
    cm.padding.target_len = o->pad_target;
    cm.seed = o->seed;
    const std::span<const VoterFlow> ref =
        reference ? std::span<const VoterFlow>(reference->flows) : std::span<const VoterFlow>();
    const auto result = attack_eval(c->flows, c->labels, ref, p, cm);
    put(report_json, attack_report_json(result));
    put(iat_csv, export_submission_iats(result.before, result.labels));
  });
}

}  // extern "C"
