// End-to-end acceptance checks. One PASS/FAIL line per criterion; the exit
// status is nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pipeline.hpp"
#include "stat_oracle.hpp"
#include "stattests.hpp"

using namespace votetrace;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::uint64_t kSeed = 1;
constexpr std::uint64_t kReferenceSeed = 1001;

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

Corpus make_corpus(const char* profile, std::size_t voters, std::uint64_t seed, bool divergence = true) {
  CorpusSpec spec;
  spec.n_voters = voters;
  spec.seed = seed;
  spec.divergence = divergence;
  return generate_corpus(load_profile(profile), spec);
}

PipelineOptions options_for(Platform platform) {
  PipelineOptions o;
  o.platform = platform;
  return o;
}

double average_or(const std::optional<ActionAccuracy>& a) { return a ? a->average : -1.0; }

std::string detected(const SubmissionVerdict& v) {
  return v.detected_action_id ? std::to_string(*v.detected_action_id) : std::string("none");
}

struct EndToEnd {
  AttackEvalResult result;
  double seconds = 0.0;
};

EndToEnd run_end_to_end(const char* profile, Platform platform) {
  const auto corpus = make_corpus(profile, 200, kSeed);
  const auto reference = make_corpus(profile, 2, kReferenceSeed);
  const auto t0 = Clock::now();
  EndToEnd e{attack_eval(corpus.flows, corpus.labels, reference.flows, options_for(platform)), 0.0};
  e.seconds = seconds_since(t0);
  return e;
}

void check_eligo(const EndToEnd& e) {
  const auto& m = e.result.metrics_before;
  const double st = average_or(m.set_model), cl = average_or(m.cluster_model);
  const bool rule = e.result.before.validity_mode == ValidityMode::rule;
  const double va = m.validity ? m.validity->accuracy : -1.0;
  report("eligo_end_to_end", st >= 0.95 && cl >= 0.90 && rule && va >= 0.99 && e.seconds < 60.0,
         "set " + fmt(st) + " (>= 0.95), cluster " + fmt(cl) + " (>= 0.90), validity mode " +
             to_string(e.result.before.validity_mode) + " accuracy " + fmt(va) + " (>= 0.99), runtime " +
             fmt(e.seconds, 2) + " s (< 60)");
}

void check_polyas(const EndToEnd& e) {
  const auto& m = e.result.metrics_before;
  const double st = average_or(m.set_model), cl = average_or(m.cluster_model);
  report("polyas_end_to_end", st >= 0.90 && cl >= 0.95,
         "set " + fmt(st) + " (>= 0.90), cluster " + fmt(cl) + " (>= 0.95)");
}

void check_detection(const EndToEnd& eligo, const EndToEnd& polyas) {
  const auto& ve = eligo.result.before.verdict;
  const auto& vp = polyas.result.before.verdict;
  report("submission_detection", ve.detected_action_id == 3 && vp.detected_action_id == 3,
         "eligo " + detected(ve) + " (jump " + fmt(ve.jump_score) + "), polyas " + detected(vp) + " (jump " +
             fmt(vp.jump_score) + "), expected 3 on both");
}

void check_segmentation(const EndToEnd& eligo, const EndToEnd& polyas) {
  const auto& qe = eligo.result.before.seg_quality;
  const auto& qp = polyas.result.before.seg_quality;
  const bool pass = qe.mean_silhouette >= 0.85 && qe.noise_ratio <= 0.01 && qp.mean_silhouette >= 0.85 &&
                    qp.noise_ratio <= 0.01;
  report("segmentation_quality", pass,
         "eligo silhouette " + fmt(qe.mean_silhouette) + " noise " + fmt(qe.noise_ratio) + "; polyas silhouette " +
             fmt(qp.mean_silhouette) + " noise " + fmt(qp.noise_ratio) + " (>= 0.85, <= 0.01)");
}

void check_stattests() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(kSeed);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> size(2, 6), grid(0, 4);
  TestOptions exact;
  exact.exact_limit = UINT64_MAX;
  std::size_t instances = 0, comparisons = 0, mismatches = 0;
  for (int t = 0; t < 120; ++t) {
    std::size_t n1 = static_cast<std::size_t>(size(rng)), n2 = static_cast<std::size_t>(size(rng));
    while (n1 + n2 > 12) --n2;
    const bool ties = t % 3 == 0;
    std::vector<double> a(n1), b(n2);
    for (auto& v : a) v = ties ? grid(rng) : nd(rng);
    for (auto& v : b) v = ties ? grid(rng) : 0.5 + 1.5 * nd(rng);
    for (auto kind : all_tests()) {
      const auto r = run_test(kind, a, b, exact);
      ++comparisons;
      if (r.method != TestMethod::exact_permutation || r.p_value != oracle::exact_p(kind, a, b)) ++mismatches;
    }
    ++instances;
  }

  // Null calibration: 2000 trials, n = 50 per group, alpha = 0.05.
  constexpr int kTrials = 2000;
  std::map<TestKind, int> rejections;
  for (int t = 0; t < kTrials; ++t) {
    std::vector<double> a(50), b(50);
    for (auto& v : a) v = nd(rng);
    for (auto& v : b) v = nd(rng);
    for (auto kind : all_tests())
      if (run_test(kind, a, b).p_value < 0.05) ++rejections[kind];
  }
  bool calibrated = true;
  std::string rates;
  for (auto kind : all_tests()) {
    const double rate = rejections[kind] / static_cast<double>(kTrials);
    calibrated = calibrated && rate >= 0.03 && rate <= 0.07;
    rates += std::string(rates.empty() ? "" : ", ") + test_name(kind) + " " + fmt(rate, 4);
  }
  const double secs = seconds_since(t0);
  report("stattest_oracle", instances >= 100 && mismatches == 0,
         std::to_string(instances) + " instances, " + std::to_string(comparisons) +
             " exact p-values compared bit-exactly, " + std::to_string(mismatches) + " mismatches");
  report("stattest_null_calibration", calibrated && secs < 300.0,
         "rejection rates in [0.03, 0.07]: " + rates + "; runtime " + fmt(secs, 1) + " s (< 300)");
}

std::map<std::string, Validity> truth_split(const Corpus& c) { return voter_validity(c.labels); }

ScreeningReport screen(const Corpus& c, const std::vector<VoterFlow>& reference) {
  auto o = options_for(Platform::polyas_like);
  o.validity = ValidityMode::screen;
  const auto split = truth_split(c);
  auto stages = run_stages(c.flows, reference, o, &split);
  if (!stages.screening) throw std::runtime_error("screening did not run: " + stages.validity_note);
  return *stages.screening;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s = "{";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + "}";
}

void check_screening() {
  const auto reference = make_corpus("polyas", 2, kReferenceSeed).flows;
  const auto diverged = screen(make_corpus("polyas", 1000, kSeed), reference);
  const auto flagged = diverged.flagged_indices();
  std::string per_index;
  for (const auto& ix : diverged.indices)
    per_index += " " + std::to_string(ix.packet_index) + ":" + std::to_string(ix.significant) + "/7";
  report("screening_divergence", flagged == std::vector<std::size_t>{2, 3},
         "1000 voters, flagged " + join(flagged) + " (expected {2,3}); significant tests per index" + per_index);

  int clean = 0;
  for (std::uint64_t s = 1; s <= 100; ++s) {
    const auto rep = screen(make_corpus("polyas", 1000, s, false), reference);
    if (rep.flagged_indices().empty()) ++clean;
  }
  report("screening_null", clean >= 95,
         std::to_string(clean) + "/100 seeded runs without divergence flag zero indices (>= 95)");
}

void check_countermeasures() {
  const auto corpus = make_corpus("eligo", 200, kSeed);
  const auto reference = make_corpus("eligo", 2, kReferenceSeed);
  const auto options = options_for(Platform::eligo_like);

  CountermeasureConfig pad;
  pad.kind = CountermeasureKind::padding;
  const auto padded = attack_eval(corpus.flows, corpus.labels, reference.flows, options, pad);
  const auto jp = nlohmann::json::parse(attack_report_json(padded));
  const double before = padded.metrics_before.validity ? padded.metrics_before.validity->accuracy : -1.0;
  const double after =
      padded.metrics_after && padded.metrics_after->validity ? padded.metrics_after->validity->accuracy : -1.0;

  // Conservation recomputed independently from the transformed flows.
  const auto transformed = apply_padding(corpus.flows, PaddingPolicy{});
  std::int64_t raw = 0, out = 0, added = 0;
  for (std::size_t v = 0; v < corpus.flows.size(); ++v)
    for (std::size_t i = 0; i < corpus.flows[v].records.size(); ++i) {
      const auto& r0 = corpus.flows[v].records[i];
      const auto& r1 = transformed.flows[v].records[i];
      if (r0.direction != Direction::outgoing || r0.payload_len == 0) continue;
      raw += r0.payload_len;
      out += r1.payload_len;
      added += r1.payload_len - r0.payload_len;
    }
  const bool conserved = out == raw + added && transformed.report.padded_bytes == out &&
                         transformed.report.raw_bytes == raw && transformed.report.padding_bytes == added;
  const bool pad_fields = jp.contains("overhead") && jp["overhead"].contains("memory_overhead_fraction") &&
                          jp["overhead"]["conservation_holds"] == true;
  report("countermeasure_padding", after >= 0.0 && after <= 0.55 && conserved && pad_fields,
         "validity accuracy " + fmt(before) + " -> " + fmt(after) + " (<= 0.55), sum padded " + std::to_string(out) +
             " = raw " + std::to_string(raw) + " + padding " + std::to_string(added) + (conserved ? "" : " VIOLATED") +
             ", memory overhead fraction " + fmt(transformed.report.overhead));

  CountermeasureConfig eq;
  eq.kind = CountermeasureKind::equalization;
  eq.seed = kSeed;
  const auto equalized = attack_eval(corpus.flows, corpus.labels, reference.flows, options, eq);
  const auto je = nlohmann::json::parse(attack_report_json(equalized));
  const bool no_detection = equalized.after && !equalized.after->verdict.detected_action_id.has_value();
  const bool eq_fields = je.contains("overhead") && je["overhead"]["corpus"].contains("mean_added_delay_s") &&
                         je["overhead"]["corpus"].contains("max_added_delay_s");
  report("countermeasure_equalization", no_detection && eq_fields,
         "detection " + detected(equalized.before.verdict) + " -> " +
             (equalized.after ? detected(equalized.after->verdict) : std::string("missing")) + " (jump " +
             fmt(equalized.after ? equalized.after->verdict.jump_score : -1.0) + "), mean/max added delay " +
             (eq_fields ? fmt(equalized.equalization->corpus.mean, 3) + "/" + fmt(equalized.equalization->corpus.max, 3) + " s"
                        : std::string("missing")));
}

// Every stage's serialized output for one seeded run.
std::vector<std::pair<std::string, std::string>> stage_outputs() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const char* profile : {"eligo", "polyas"}) {
    const auto platform = *parse_platform(profile);
    const auto corpus = make_corpus(profile, 200, kSeed);
    const auto reference = make_corpus(profile, 2, kReferenceSeed);
    const std::string p = profile;
    out.emplace_back(p + " trace", write_trace_csv(corpus.flows));
    out.emplace_back(p + " labels", write_labels_csv(corpus.labels));
    const auto split = voter_validity(corpus.labels);
    const auto s = run_stages(corpus.flows, reference.flows, options_for(platform), &split);
    out.emplace_back(p + " bursts", write_burst_csv(s.seg));
    out.emplace_back(p + " catalog", catalog_to_json(s.catalog));
    out.emplace_back(p + " assignments", write_assignments_csv(s.set_assignments));
    out.emplace_back(p + " clusters", s.labeling ? write_labeling_csv(*s.labeling) : s.cluster_error);
    out.emplace_back(p + " curves", write_curves_csv(s.signatures));
    out.emplace_back(p + " verdict", verdict_to_json(s.verdict, s.signatures));
    out.emplace_back(p + " verdicts", write_verdicts_csv(s.verdicts));
    out.emplace_back(p + " rule", s.rule ? rule_to_json(*s.rule) : s.validity_note);
    out.emplace_back(p + " screening", s.screening ? write_screening_csv(*s.screening) : s.validity_note);
    out.emplace_back(p + " iat export", export_submission_iats(s, corpus.labels));
    const auto padded = apply_padding(corpus.flows, PaddingPolicy{});
    out.emplace_back(p + " padded trace", write_trace_csv(padded.flows));
    out.emplace_back(p + " padding report", padding_report_json(padded.report));
    const auto filtered = filter_analysis_population(corpus.flows);
    const auto seg = segment_corpus(filtered, SegmentOptions{});
    const auto eq = apply_time_equalization(seg, baseline_from_max_length(seg), kSeed);
    out.emplace_back(p + " equalized trace", write_trace_csv(eq.flows));
    out.emplace_back(p + " equalization report", equalization_report_json(eq.report));
    for (auto kind : {CountermeasureKind::none, CountermeasureKind::padding, CountermeasureKind::equalization}) {
      CountermeasureConfig cm;
      cm.kind = kind;
      cm.seed = kSeed;
      out.emplace_back(p + " attack report " + to_string(kind),
                       attack_report_json(attack_eval(corpus.flows, corpus.labels, reference.flows,
                                                      options_for(platform), cm)));
    }
  }
  return out;
}

void check_determinism() {
  const auto first = stage_outputs();
  const auto second = stage_outputs();
  std::string differing;
  for (std::size_t i = 0; i < first.size(); ++i)
    if (first[i].second != second[i].second) differing += " " + first[i].first;
  report("determinism", differing.empty(),
         std::to_string(first.size()) + " stage outputs compared byte for byte" +
             (differing.empty() ? std::string(", all identical") : ", differing:" + differing));
}

}  // namespace

int main() {
  try {
    const auto eligo = run_end_to_end("eligo", Platform::eligo_like);
    const auto polyas = run_end_to_end("polyas", Platform::polyas_like);
    check_eligo(eligo);
    check_polyas(polyas);
    check_detection(eligo, polyas);
    check_segmentation(eligo, polyas);
    check_stattests();
    check_screening();
    check_countermeasures();
    check_determinism();
  } catch (const std::exception& e) {
    report("acceptance_run", false, std::string("aborted: ") + e.what());
  }
  std::printf("%d failing criteria\n", failures);
  return failures ? 1 : 0;
}
