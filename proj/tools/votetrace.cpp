// votetrace command-line front end. Talks to the library only through the C API.
#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "votetrace/votetrace.h"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(vt_status s) {
  switch (s) {
    case VT_OK: return kExitOk;
    case VT_ERR_USAGE: return kExitUsage;
    case VT_ERR_IO:
    case VT_ERR_PARSE:
    case VT_ERR_DATA: return kExitData;
    default: return kExitInternal;
  }
}

void check(vt_status s) {
  if (s == VT_OK) return;
  std::string code = vt_last_error_code();
  throw Failure{exit_code_for(s), (code.empty() ? "" : "[" + code + "] ") + vt_last_error()};
}

[[noreturn]] void usage_error(const std::string& msg) { throw Failure{kExitUsage, msg}; }

// Owns a malloc'd string handed out by the library.
class CString {
public:
  CString() = default;
  CString(const CString&) = delete;
  CString& operator=(const CString&) = delete;
  ~CString() { vt_string_free(p_); }
  char** out() { return &p_; }
  std::string str() const { return p_ ? std::string(p_) : std::string(); }

private:
  char* p_ = nullptr;
};

template <class T, void (*Free)(T*)>
class Handle {
public:
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p_); }
  T** out() { return &p_; }
  T* get() const { return p_; }

private:
  T* p_ = nullptr;
};

using Corpus = Handle<vt_corpus, vt_corpus_free>;
using Segmentation = Handle<vt_segmentation, vt_segmentation_free>;
using Catalog = Handle<vt_catalog, vt_catalog_free>;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitData, "[cli.io] cannot open '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Failure{kExitData, "[cli.io] cannot write '" + tmp.string() + "'"};
    out << content;
    if (!out.flush()) throw Failure{kExitData, "[cli.io] write failed for '" + tmp.string() + "'"};
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Failure{kExitData, "[cli.io] cannot rename into '" + path.string() + "': " + ec.message()};
}

std::vector<double> read_numbers(const std::string& path) {
  std::string text = read_text(path);
  for (char& c : text)
    if (c == ',' || c == ';' || c == '\t' || c == '\r') c = ' ';
  std::istringstream in(text);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0' || errno == ERANGE)
      throw Failure{kExitData, "[cli.parse] '" + path + "': not a number: '" + tok + "'"};
    out.push_back(v);
  }
  return out;
}

struct Run {
  std::string subcommand;
  fs::path out_dir = ".";
  unsigned threads = 0;
  std::optional<std::uint64_t> seed_flag;
  std::uint64_t seed = 1;
  std::string seed_source = "default";
  std::vector<std::pair<fs::path, std::string>> outputs;
  ojson summary = ojson::object();

  void add(const std::string& name, std::string content) { outputs.emplace_back(out_dir / name, std::move(content)); }
};

void resolve_seed(Run& run) {
  if (run.seed_flag) {
    run.seed = *run.seed_flag;
    run.seed_source = "flag";
    return;
  }
  if (const char* env = std::getenv("VOTETRACE_SEED"); env && *env) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || errno == ERANGE || env[0] == '-') usage_error("VOTETRACE_SEED must be an unsigned integer");
    run.seed = v;
    run.seed_source = "VOTETRACE_SEED";
  }
}

ojson config_of(const CLI::App* sub) {
  ojson j = ojson::object();
  for (const auto* opt : sub->get_options()) {
    const std::string name = opt->get_name(false, true);
    if (name.empty()) continue;
    std::string key = opt->get_lnames().empty() ? name : opt->get_lnames().front();
    if (key == "help") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (opt->get_type_size() == 0) j[key] = true;
      else if (res.size() == 1) j[key] = res.front();
      else j[key] = res;
    } else {
      const auto d = opt->get_default_str();
      j[key] = opt->get_type_size() == 0 ? ojson(false) : (d.empty() ? ojson(nullptr) : ojson(d));
    }
  }
  return j;
}

struct SegmentFlags {
  double eps = 0.0;
  std::size_t min_pts = 2;
  bool auto_eps = false;
};

void add_segment_flags(CLI::App* sub, SegmentFlags& f) {
  auto* eps = sub->add_option("--eps", f.eps, "Segmentation eps in seconds (default: per-voter gap heuristic)")
                  ->check(CLI::PositiveNumber);
  sub->add_option("--min-pts", f.min_pts, "Segmentation min_pts")->default_val(2)->check(CLI::PositiveNumber);
  sub->add_flag("--auto-eps", f.auto_eps, "Pick eps per voter from the IAT gap heuristic")->excludes(eps);
}

vt_segment_options segment_options(const SegmentFlags& f, unsigned threads) {
  vt_segment_options o;
  vt_segment_options_init(&o);
  o.eps = f.auto_eps ? 0.0 : f.eps;
  o.min_pts = f.min_pts;
  o.threads = threads;
  return o;
}

void load_corpus(Corpus& c, const std::string& path) { check(vt_corpus_load(path.c_str(), c.out())); }

void segment(Segmentation& s, const Corpus& c, const SegmentFlags& f, unsigned threads) {
  const auto o = segment_options(f, threads);
  check(vt_segment(c.get(), &o, s.out()));
}

std::string platform_flag_help() { return "Platform profile: eligo or polyas"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"votetrace: action, timing and ballot-validity inference from encrypted voting traffic"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(vt_version()));

  Run run;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--out-dir", run.out_dir, "Directory for all outputs")->default_val(".");
    sub->add_option("--threads", run.threads, "Worker threads (0: all cores)")->default_val(0);
  };
  auto seed_flag = [&](CLI::App* sub, const char* help) {
    sub->add_option("--seed", run.seed_flag, help);
  };

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a labeled synthetic corpus");
  std::string g_profile;
  std::size_t g_voters = 200;
  double g_valid = 0.5, g_abandon = 0.0, g_sigma = 0.0;
  bool g_no_div = false;
  gen->add_option("--profile", g_profile, "eligo, polyas, or a profile JSON file")->required();
  gen->add_option("--voters", g_voters, "Number of voters")->default_val(200)->check(CLI::PositiveNumber);
  gen->add_option("--valid-fraction", g_valid, "Fraction of valid ballots")->default_val(0.5)->check(CLI::Range(0.0, 1.0));
  gen->add_option("--abandon-fraction", g_abandon, "Fraction of sessions that stop before voting")
      ->default_val(0.0)
      ->check(CLI::Range(0.0, 1.0));
  gen->add_flag("--no-divergence", g_no_div, "Do not inject the profile's timing divergence");
  gen->add_option("--sigma-factor", g_sigma, "Override the divergence scale factor")->check(CLI::PositiveNumber);
  seed_flag(gen, "RNG seed (fallback: VOTETRACE_SEED, then 1)");
  common(gen);

  // segment
  auto* seg = app.add_subcommand("segment", "Split each voter flow into activity bursts");
  std::string s_trace;
  SegmentFlags s_flags;
  seg->add_option("--trace", s_trace, "Trace file (.csv or .jsonl)")->required();
  add_segment_flags(seg, s_flags);
  common(seg);

  // classify
  auto* cls = app.add_subcommand("classify", "Assign actions to bursts");
  std::string c_trace, c_model = "set", c_platform = "eligo", c_catalog, c_reference;
  SegmentFlags c_flags;
  double c_ceps = 0.0;
  std::size_t c_cmin = 5;
  cls->add_option("--trace", c_trace, "Trace file")->required();
  cls->add_option("--model", c_model, "set or cluster")->default_val("set")->check(CLI::IsMember({"set", "cluster"}));
  cls->add_option("--platform", c_platform, platform_flag_help())->default_val("eligo")
      ->check(CLI::IsMember({"eligo", "polyas", "eligo_like", "polyas_like", "custom"}));
  cls->add_option("--catalog", c_catalog, "Catalog JSON to use instead of learning one");
  cls->add_option("--reference-trace", c_reference, "Attacker-recorded reference sessions");
  cls->add_option("--cluster-eps", c_ceps, "Clustering eps (default: k-distance knee)")->check(CLI::PositiveNumber);
  cls->add_option("--cluster-min-pts", c_cmin, "Clustering min_pts")->default_val(5)->check(CLI::PositiveNumber);
  add_segment_flags(cls, c_flags);
  common(cls);

  // signature
  auto* sig = app.add_subcommand("signature", "Build per-action timing signatures and detect submission");
  std::string sg_trace, sg_assign;
  SegmentFlags sg_flags;
  vt_signature_options sg_opts;
  vt_signature_options_init(&sg_opts);
  sig->add_option("--trace", sg_trace, "Trace file")->required();
  sig->add_option("--assignments", sg_assign, "Assignment or cluster labeling CSV")->required();
  sig->add_option("--window", sg_opts.window, "Rolling-mean window")->default_val(sg_opts.window)->check(CLI::PositiveNumber);
  sig->add_option("--length", sg_opts.length, "Resampling length")->default_val(sg_opts.length)->check(CLI::Range(2, 1000000));
  sig->add_option("--central-lo", sg_opts.central_lo, "Central window start")->default_val(sg_opts.central_lo);
  sig->add_option("--central-hi", sg_opts.central_hi, "Central window end")->default_val(sg_opts.central_hi);
  sig->add_option("--threshold", sg_opts.threshold, "Jump threshold")->default_val(sg_opts.threshold);
  add_segment_flags(sig, sg_flags);
  common(sig);

  // validity
  auto* val = app.add_subcommand("validity", "Infer ballot validity");
  std::string v_mode = "rule", v_trace, v_assign, v_platform = "eligo", v_split;
  SegmentFlags v_flags;
  vt_screen_options v_screen;
  vt_screen_options_init(&v_screen);
  val->add_option("--mode", v_mode, "rule or screen")->default_val("rule")->check(CLI::IsMember({"rule", "screen"}));
  val->add_option("--trace", v_trace, "Trace file")->required();
  val->add_option("--assignments", v_assign, "Assignment or cluster labeling CSV")->required();
  val->add_option("--platform", v_platform, platform_flag_help())->default_val("eligo")
      ->check(CLI::IsMember({"eligo", "polyas", "eligo_like", "polyas_like", "custom"}));
  val->add_option("--split", v_split, "Screen mode: CSV voter_id,group");
  val->add_option("--k", v_screen.k, "Significant tests needed to flag an index")->default_val(v_screen.k);
  val->add_option("--index-lo", v_screen.index_lo, "First IAT index screened")->default_val(v_screen.index_lo);
  val->add_option("--index-hi", v_screen.index_hi, "Last IAT index screened")->default_val(v_screen.index_hi);
  val->add_option("--alpha", v_screen.alpha, "Significance level")->default_val(v_screen.alpha);
  val->add_option("--exact-limit", v_screen.exact_limit, "Largest permutation count enumerated exactly")
      ->default_val(v_screen.exact_limit);
  add_segment_flags(val, v_flags);
  common(val);

  // stattest
  auto* st = app.add_subcommand("stattest", "Run two-sample tests on two value files");
  std::string t_test = "all", t_a, t_b;
  std::uint64_t t_limit = 200000;
  st->add_option("--test", t_test, "Test name or all")->default_val("all");
  st->add_option("--a", t_a, "First sample (numbers separated by whitespace, commas or newlines)")->required();
  st->add_option("--b", t_b, "Second sample")->required();
  st->add_option("--exact-limit", t_limit, "Largest permutation count enumerated exactly")->default_val(200000);
  common(st);

  // countermeasure
  auto* cm = app.add_subcommand("countermeasure", "Apply padding or time equalization to a trace");
  std::string m_trace, m_assign, m_labels;
  bool m_pad = false, m_eq = false;
  std::int64_t m_target = 2085;
  SegmentFlags m_flags;
  cm->add_option("--trace", m_trace, "Trace file")->required();
  auto* pad_flag = cm->add_flag("--pad", m_pad, "Pad outgoing payloads to --target bytes");
  auto* eq_flag = cm->add_flag("--equalize", m_eq, "Redraw intra-burst IATs from the baseline distribution");
  pad_flag->excludes(eq_flag);
  cm->add_option("--target", m_target, "Padding target length")->default_val(2085)->check(CLI::PositiveNumber);
  cm->add_option("--assignments", m_assign, "Equalization: assignments naming actions for the delay table");
  seed_flag(cm, "Equalization seed (fallback: VOTETRACE_SEED, then 1)");
  add_segment_flags(cm, m_flags);
  common(cm);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score pipeline outputs against ground truth");
  std::string e_labels, e_platform = "eligo", e_set, e_cluster, e_verdicts;
  ev->add_option("--labels", e_labels, "Ground-truth labels CSV")->required();
  ev->add_option("--platform", e_platform, platform_flag_help())->default_val("eligo")
      ->check(CLI::IsMember({"eligo", "polyas", "eligo_like", "polyas_like", "custom"}));
  ev->add_option("--set-assignments", e_set, "Set-model assignments CSV");
  ev->add_option("--cluster-assignments", e_cluster, "Cluster labeling CSV");
  ev->add_option("--verdicts", e_verdicts, "Validity verdict CSV");
  common(ev);

  // attack-eval
  auto* ae = app.add_subcommand("attack-eval", "Run the whole attack and score it");
  std::string a_trace, a_labels, a_reference, a_platform = "eligo", a_cm = "none", a_validity = "auto", a_iat;
  std::int64_t a_target = 2085;
  SegmentFlags a_flags;
  double a_ceps = 0.0;
  std::size_t a_cmin = 5;
  vt_screen_options a_screen;
  vt_screen_options_init(&a_screen);
  ae->add_option("--trace", a_trace, "Trace file")->required();
  ae->add_option("--labels", a_labels, "Ground-truth labels CSV (default: labels in the trace)");
  ae->add_option("--reference-trace", a_reference, "Attacker-recorded reference sessions");
  ae->add_option("--platform", a_platform, platform_flag_help())->default_val("eligo")
      ->check(CLI::IsMember({"eligo", "polyas", "eligo_like", "polyas_like", "custom"}));
  ae->add_option("--countermeasure", a_cm, "none, pad or equalize")->default_val("none")
      ->check(CLI::IsMember({"none", "pad", "equalize"}));
  ae->add_option("--target", a_target, "Padding target length")->default_val(2085)->check(CLI::PositiveNumber);
  ae->add_option("--validity-mode", a_validity, "auto, rule, screen or none")->default_val("auto")
      ->check(CLI::IsMember({"auto", "rule", "screen", "none"}));
  ae->add_option("--k", a_screen.k, "Screening: significant tests needed to flag an index")->default_val(a_screen.k);
  ae->add_option("--cluster-eps", a_ceps, "Clustering eps (default: k-distance knee)")->check(CLI::PositiveNumber);
  ae->add_option("--cluster-min-pts", a_cmin, "Clustering min_pts")->default_val(5)->check(CLI::PositiveNumber);
  ae->add_option("--export-iat", a_iat, "Write submission-burst IATs (voter_id,index,iat,label) to this file");
  seed_flag(ae, "Countermeasure seed (fallback: VOTETRACE_SEED, then 1)");
  add_segment_flags(ae, a_flags);
  common(ae);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return e.get_exit_code() == 0 ? rc : kExitUsage;
  }

  CLI::App* active = app.get_subcommands().front();
  run.subcommand = active->get_name();
  try {
    resolve_seed(run);

    if (active == gen) {
      vt_generate_options o;
      vt_generate_options_init(&o);
      o.n_voters = g_voters;
      o.valid_fraction = g_valid;
      o.abandon_fraction = g_abandon;
      o.seed = run.seed;
      o.divergence = g_no_div ? 0 : 1;
      o.sigma_factor = g_sigma;
      o.threads = run.threads;
      Corpus c;
      check(vt_corpus_generate(g_profile.c_str(), &o, c.out()));
      CString trace, labels;
      check(vt_corpus_trace_csv(c.get(), trace.out()));
      check(vt_corpus_labels_csv(c.get(), labels.out()));
      run.add("trace.csv", trace.str());
      run.add("labels.csv", labels.str());
      run.summary["voters"] = vt_corpus_voter_count(c.get());
    } else if (active == seg) {
      Corpus c;
      load_corpus(c, s_trace);
      Segmentation s;
      segment(s, c, s_flags, run.threads);
      CString bursts;
      check(vt_segmentation_bursts_csv(s.get(), bursts.out()));
      vt_segment_quality q;
      check(vt_segmentation_quality(s.get(), &q));
      ojson j;
      j["voters"] = vt_corpus_voter_count(c.get());
      j["bursts"] = q.bursts;
      j["empty_flows"] = q.empty_flows;
      j["mean_silhouette"] = q.mean_silhouette;
      j["sd_silhouette"] = q.sd_silhouette;
      j["voters_scored"] = q.voters_scored;
      j["noise_ratio"] = q.noise_ratio;
      run.add("bursts.csv", bursts.str());
      run.add("segmentation.json", j.dump(2) + "\n");
      run.summary = j;
    } else if (active == cls) {
      Corpus c;
      load_corpus(c, c_trace);
      Segmentation s;
      segment(s, c, c_flags, run.threads);
      Catalog cat;
      std::string source;
      if (!c_catalog.empty()) {
        check(vt_catalog_from_json(read_text(c_catalog).c_str(), cat.out()));
        source = "file";
      } else if (!c_reference.empty()) {
        Corpus ref;
        load_corpus(ref, c_reference);
        const auto o = segment_options(c_flags, run.threads);
        check(vt_catalog_from_reference(ref.get(), c_platform.c_str(), &o, cat.out()));
        source = "reference";
      } else {
        check(vt_catalog_from_first_voter(s.get(), c_platform.c_str(), cat.out()));
        source = "first_voter";
      }
      CString catalog_json;
      check(vt_catalog_to_json(cat.get(), catalog_json.out()));
      run.add("catalog.json", catalog_json.str());
      run.summary["catalog_source"] = source;
      if (c_model == "set") {
        CString assignments, sessions;
        check(vt_classify_set(s.get(), cat.get(), assignments.out(), sessions.out()));
        run.add("assignments.csv", assignments.str());
        run.add("sessions.json", sessions.str());
        run.summary["sessions_with_deviations"] = ojson::parse(sessions.str())["sessions_with_deviations"];
      } else {
        vt_cluster_options o;
        vt_cluster_options_init(&o);
        o.eps = c_ceps;
        o.min_pts = c_cmin;
        CString labeling, quality;
        check(vt_classify_cluster(s.get(), cat.get(), &o, labeling.out(), quality.out()));
        run.add("clusters.csv", labeling.str());
        run.add("clusters.json", quality.str());
        const auto q = ojson::parse(quality.str());
        run.summary["clusters"] = q["clusters"];
        run.summary["silhouette"] = q["silhouette"];
        run.summary["noise_ratio"] = q["noise_ratio"];
      }
    } else if (active == sig) {
      Corpus c;
      load_corpus(c, sg_trace);
      Segmentation s;
      segment(s, c, sg_flags, run.threads);
      CString curves, verdict;
      check(vt_signature(s.get(), read_text(sg_assign).c_str(), &sg_opts, curves.out(), verdict.out()));
      run.add("curves.csv", curves.str());
      run.add("signature.json", verdict.str());
      const auto v = ojson::parse(verdict.str());
      run.summary["detected_action_id"] = v["detected_action_id"];
      run.summary["jump_score"] = v["jump_score"];
    } else if (active == val) {
      if (v_mode == "screen" && v_split.empty()) usage_error("--mode screen needs --split");
      Corpus c;
      load_corpus(c, v_trace);
      Segmentation s;
      segment(s, c, v_flags, run.threads);
      const std::string assignments = read_text(v_assign);
      if (v_mode == "rule") {
        CString verdicts, rule;
        check(vt_validity_rule(s.get(), assignments.c_str(), v_platform.c_str(), nullptr, verdicts.out(), rule.out()));
        run.add("verdicts.csv", verdicts.str());
        run.add("rule.json", rule.str());
        const auto r = ojson::parse(rule.str());
        run.summary["valid_action_id"] = r["valid_action_id"];
        run.summary["spoiled_action_id"] = r["spoiled_action_id"];
      } else {
        v_screen.threads = run.threads;
        CString csv, summary;
        check(vt_validity_screen(s.get(), assignments.c_str(), read_text(v_split).c_str(), v_platform.c_str(),
                                 &v_screen, csv.out(), summary.out()));
        run.add("screening.csv", csv.str());
        run.add("screening.json", summary.str());
        run.summary["flagged_indices"] = ojson::parse(summary.str())["flagged_indices"];
      }
    } else if (active == st) {
      const auto a = read_numbers(t_a);
      const auto b = read_numbers(t_b);
      std::vector<std::string> names;
      if (t_test == "all") {
        for (std::size_t i = 0; i < vt_stattest_count(); ++i) names.emplace_back(vt_stattest_name(i));
      } else {
        names.push_back(t_test);
      }
      ojson reports = ojson::array();
      for (const auto& name : names) {
        vt_test_report r;
        check(vt_stattest(name.c_str(), a.data(), a.size(), b.data(), b.size(), t_limit, &r));
        ojson j;
        j["test_name"] = r.test_name;
        j["statistic"] = std::isfinite(r.statistic) ? ojson(r.statistic) : ojson(nullptr);
        j["p_value"] = r.p_value;
        j["method"] = r.method == VT_METHOD_EXACT ? "exact_permutation" : "asymptotic";
        j["n1"] = r.n1;
        j["n2"] = r.n2;
        reports.push_back(std::move(j));
      }
      const std::string text = reports.dump(2) + "\n";
      std::cout << text;
      run.add("stattest.json", text);
      run.summary["tests"] = names.size();
    } else if (active == cm) {
      if (m_pad == m_eq) usage_error("choose exactly one of --pad or --equalize");
      Corpus c;
      load_corpus(c, m_trace);
      Corpus out;
      CString report, trace;
      if (m_pad) {
        check(vt_pad(c.get(), m_target, out.out(), report.out()));
      } else {
        const auto o = segment_options(m_flags, run.threads);
        const std::string assignments = m_assign.empty() ? std::string() : read_text(m_assign);
        check(vt_equalize(c.get(), &o, run.seed, m_assign.empty() ? nullptr : assignments.c_str(), out.out(),
                          report.out()));
      }
      check(vt_corpus_trace_csv(out.get(), trace.out()));
      run.add("trace.csv", trace.str());
      run.add("overhead.json", report.str());
      const auto r = ojson::parse(report.str());
      if (m_pad) {
        run.summary["memory_overhead_fraction"] = r["memory_overhead_fraction"];
        run.summary["max_voter_overhead_fraction"] = r["max_voter_overhead_fraction"];
      } else {
        run.summary["mean_added_delay_s"] = r["corpus"]["mean_added_delay_s"];
        run.summary["max_added_delay_s"] = r["corpus"]["max_added_delay_s"];
      }
    } else if (active == ev) {
      const std::string labels = read_text(e_labels);
      const std::string set_a = e_set.empty() ? "" : read_text(e_set);
      const std::string cl_a = e_cluster.empty() ? "" : read_text(e_cluster);
      const std::string verdicts = e_verdicts.empty() ? "" : read_text(e_verdicts);
      CString metrics;
      check(vt_evaluate(labels.c_str(), e_platform.c_str(), e_set.empty() ? nullptr : set_a.c_str(),
                        e_cluster.empty() ? nullptr : cl_a.c_str(), e_verdicts.empty() ? nullptr : verdicts.c_str(),
                        metrics.out()));
      run.add("metrics.json", metrics.str());
      const auto m = ojson::parse(metrics.str());
      run.summary["set_model_average"] = m["set_model"].is_null() ? ojson(nullptr) : m["set_model"]["average"];
      run.summary["cluster_model_average"] =
          m["cluster_model"].is_null() ? ojson(nullptr) : m["cluster_model"]["average"];
      run.summary["validity_accuracy"] = m["validity"].is_null() ? ojson(nullptr) : m["validity"]["accuracy"];
    } else if (active == ae) {
      Corpus c;
      load_corpus(c, a_trace);
      if (!a_labels.empty()) check(vt_corpus_attach_labels(c.get(), a_labels.c_str()));
      Corpus ref;
      if (!a_reference.empty()) load_corpus(ref, a_reference);
      vt_attack_options o;
      vt_attack_options_init(&o);
      o.platform = a_platform.c_str();
      o.segment = segment_options(a_flags, run.threads);
      o.cluster.eps = a_ceps;
      o.cluster.min_pts = a_cmin;
      o.screen = a_screen;
      o.screen.threads = run.threads;
      o.validity = a_validity == "rule"     ? VT_VALIDITY_RULE
                   : a_validity == "screen" ? VT_VALIDITY_SCREEN
                   : a_validity == "none"   ? VT_VALIDITY_NONE
                                            : VT_VALIDITY_AUTO;
      o.countermeasure = a_cm == "pad" ? VT_CM_PAD : a_cm == "equalize" ? VT_CM_EQUALIZE : VT_CM_NONE;
      o.pad_target = a_target;
      o.seed = run.seed;
      o.threads = run.threads;
      CString report, iat;
      check(vt_attack_eval(c.get(), a_reference.empty() ? nullptr : ref.get(), &o, report.out(),
                           a_iat.empty() ? nullptr : iat.out()));
      run.add("attack_report.json", report.str());
      if (!a_iat.empty()) run.outputs.emplace_back(fs::path(a_iat), iat.str());
      const auto r = ojson::parse(report.str());
      const auto& b = r["before"];
      auto avg = [](const ojson& acc) { return acc.is_null() ? ojson(nullptr) : acc["average"]; };
      run.summary["set_model_average"] = avg(b["set_model"]["accuracy"]);
      run.summary["cluster_model_average"] = avg(b["cluster_model"]["accuracy"]);
      run.summary["detected_action_id"] = b["signature"]["detected_action_id"];
      run.summary["validity_mode"] = b["validity"]["mode"];
      run.summary["validity_accuracy"] =
          b["validity"]["metrics"].is_null() ? ojson(nullptr) : b["validity"]["metrics"]["accuracy"];
    }

    ojson report;
    report["tool"] = "votetrace";
    report["version"] = vt_version();
    report["subcommand"] = run.subcommand;
    report["config"] = config_of(active);
    report["seed"] = run.seed;
    report["seed_source"] = run.seed_source;
    auto& outs = report["outputs"] = ojson::array();
    for (const auto& [path, content] : run.outputs) outs.push_back(path.generic_string());
    report["summary"] = run.summary;
    for (const auto& [path, content] : run.outputs) write_atomic(path, content);
    write_atomic(run.out_dir / "run_report.json", report.dump(2) + "\n");
    return kExitOk;
  } catch (const Failure& f) {
    std::cerr << "votetrace " << run.subcommand << ": " << f.message << "\n";
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "votetrace " << run.subcommand << ": [cli.internal] " << e.what() << "\n";
    return kExitInternal;
  }
}
