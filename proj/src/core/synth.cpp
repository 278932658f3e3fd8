#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include <json.hpp>

#include "error.hpp"
#include "parallel.hpp"
#include "text.hpp"

namespace votetrace {

namespace {
constexpr const char* kModule = "synth";
using nlohmann::json;

[[noreturn]] void bad_profile(const std::string& what) {
  throw Error(kModule, ErrorKind::parse, "invalid profile: " + what);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad_profile(std::string("field '") + key + "' has the wrong type");
  }
}

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad_profile(std::string("missing field '") + key + "'");
  return j.at(key);
}

double lognormal(std::mt19937_64& rng, double median, double sigma) {
  std::normal_distribution<double> z(0.0, 1.0);
  return median * std::exp(sigma * z(rng));
}

double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

std::string voter_name(const std::string& prefix, std::size_t i, std::size_t n) {
  std::string digits = std::to_string(i + 1);
  const std::size_t width = std::max<std::size_t>(4, std::to_string(n).size());
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

enum class SessionKind { valid, spoiled, abandoned };

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

const char* to_string(ValidityEffect e) {
  return e == ValidityEffect::payload_divergence ? "payload_divergence" : "timing_divergence";
}

const ActionProfile* PlatformProfile::find(int action_id) const {
  for (const auto& a : actions)
    if (a.action_id == action_id) return &a;
  return nullptr;
}

std::vector<int> PlatformProfile::submission_ids() const {
  if (submission_step >= typical_sequence.size()) return {};
  return typical_sequence[submission_step];
}

PlatformProfile parse_profile(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(kModule, ErrorKind::parse, std::string("profile is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad_profile("top level must be an object");
  PlatformProfile p;
  try {
    p.name = require(j, "name").get<std::string>();
    p.platform = parse_platform(p.name).value_or(Platform::custom);
    p.typical_sequence = require(j, "typical_sequence").get<TypicalSequence>();
    p.submission_step = require(j, "submission_step").get<std::size_t>();
    const auto effect = require(j, "validity_effect").get<std::string>();
    if (effect == "payload_divergence") p.validity_effect = ValidityEffect::payload_divergence;
    else if (effect == "timing_divergence") p.validity_effect = ValidityEffect::timing_divergence;
    else bad_profile("unknown validity_effect '" + effect + "'");
    p.valid_action = require(j, "valid_action").get<int>();
    p.spoiled_action = require(j, "spoiled_action").get<int>();
    for (const auto& a : require(j, "actions")) {
      ActionProfile ap;
      ap.action_id = require(a, "action_id").get<int>();
      ap.name = get_or<std::string>(a, "name", "");
      ap.payloads = require(a, "payloads").get<std::vector<std::int64_t>>();
      ap.jitter = get_or<std::vector<std::int64_t>>(a, "jitter", {});
      for (const auto& m : require(a, "iat"))
        ap.iat.push_back({require(m, "median").get<double>(), require(m, "sigma").get<double>()});
      if (a.contains("mixture")) {
        const auto& m = a.at("mixture");
        ap.mixture = MixtureDelay{require(m, "index").get<std::size_t>(), require(m, "delay").get<double>(),
                                  require(m, "probability").get<double>()};
      }
      p.actions.push_back(std::move(ap));
    }
    if (j.contains("divergence")) {
      const auto& d = j.at("divergence");
      p.divergence = TimingDivergence{require(d, "action_id").get<int>(),
                                      require(d, "indices").get<std::vector<std::size_t>>(),
                                      get_or<double>(d, "sigma_factor", 1.5)};
    }
    if (j.contains("pacing")) {
      const auto& g = j.at("pacing");
      p.pacing = {get_or<double>(g, "gap_median", 3.0), get_or<double>(g, "gap_sigma", 0.3),
                  get_or<double>(g, "gap_floor", 2.0)};
    }
    p.window_seconds = get_or<double>(j, "window_seconds", 3600.0);
    if (j.contains("response")) {
      const auto& r = j.at("response");
      p.response.probability = get_or<double>(r, "probability", 0.8);
      p.response.delay_median = get_or<double>(r, "delay_median", 0.01);
      p.response.delay_sigma = get_or<double>(r, "delay_sigma", 0.3);
      p.response.payloads = get_or<std::vector<std::int64_t>>(r, "payloads", {96});
    }
    p.empty_record_probability = get_or<double>(j, "empty_record_probability", 0.0);
  } catch (const json::exception& e) {
    bad_profile(e.what());
  }

  std::set<int> ids;
  for (auto& a : p.actions) {
    if (!ids.insert(a.action_id).second) bad_profile("duplicate action_id " + std::to_string(a.action_id));
    if (a.payloads.empty()) bad_profile("action " + std::to_string(a.action_id) + " has no payloads");
    if (a.jitter.empty()) a.jitter.assign(a.payloads.size(), 0);
    if (a.jitter.size() != a.payloads.size())
      bad_profile("action " + std::to_string(a.action_id) + ": jitter and payloads differ in length");
    if (a.iat.size() + 1 != a.payloads.size())
      bad_profile("action " + std::to_string(a.action_id) + ": need one IAT model per packet after the first");
    for (std::size_t i = 0; i < a.payloads.size(); ++i)
      if (a.payloads[i] - a.jitter[i] <= 0 || a.jitter[i] < 0)
        bad_profile("action " + std::to_string(a.action_id) + ": payload lengths must stay positive");
    for (const auto& m : a.iat)
      if (!(m.median > 0.0) || !(m.sigma >= 0.0)) bad_profile("IAT medians must be > 0 and sigmas >= 0");
    if (a.mixture && (a.mixture->index == 0 || a.mixture->index > a.iat.size() || a.mixture->delay < 0.0 ||
                      a.mixture->probability < 0.0 || a.mixture->probability > 1.0))
      bad_profile("action " + std::to_string(a.action_id) + ": bad mixture");
  }
  if (p.typical_sequence.empty()) bad_profile("typical_sequence is empty");
  for (const auto& step : p.typical_sequence) {
    if (step.empty()) bad_profile("typical_sequence has an empty step");
    for (int id : step)
      if (!ids.count(id)) bad_profile("typical_sequence names unknown action " + std::to_string(id));
  }
  if (p.submission_step >= p.typical_sequence.size()) bad_profile("submission_step out of range");
  const auto& sub = p.typical_sequence[p.submission_step];
  if (std::find(sub.begin(), sub.end(), p.valid_action) == sub.end() ||
      std::find(sub.begin(), sub.end(), p.spoiled_action) == sub.end())
    bad_profile("valid_action and spoiled_action must belong to the submission step");
  if (p.divergence) {
    const auto* a = p.find(p.divergence->action_id);
    if (!a) bad_profile("divergence names unknown action");
    for (auto i : p.divergence->indices)
      if (i == 0 || i > a->iat.size()) bad_profile("divergence index out of range");
    if (!(p.divergence->sigma_factor > 0.0)) bad_profile("sigma_factor must be > 0");
  }
  if (!(p.pacing.gap_median > 0.0) || p.pacing.gap_sigma < 0.0 || p.pacing.gap_floor < 0.0)
    bad_profile("bad pacing parameters");
  if (!(p.window_seconds >= 0.0)) bad_profile("window_seconds must be >= 0");
  if (p.response.probability < 0.0 || p.response.probability > 1.0 || p.response.payloads.empty())
    bad_profile("bad response model");
  if (p.empty_record_probability < 0.0 || p.empty_record_probability > 1.0)
    bad_profile("empty_record_probability must be in [0, 1]");
  return p;
}

std::string_view builtin_profile_json(Platform platform) {
  switch (platform) {
    case Platform::eligo_like: return builtin::kEligoLikeJson;
    case Platform::polyas_like: return builtin::kPolyasLikeJson;
    case Platform::custom: break;
  }
  throw Error(kModule, ErrorKind::usage, "no built-in profile for a custom platform");
}

PlatformProfile load_profile(std::string_view name_or_path) {
  if (auto p = parse_platform(name_or_path); p && *p != Platform::custom)
    return parse_profile(builtin_profile_json(*p));
  const std::filesystem::path path{std::string(name_or_path)};
  if (!std::filesystem::exists(path))
    throw Error(kModule, ErrorKind::usage,
                "unknown profile '" + std::string(name_or_path) + "' (expected eligo, polyas, or a profile file)");
  return parse_profile(text::read_file(path, kModule));
}

Corpus generate_corpus(const PlatformProfile& profile, const CorpusSpec& spec) {
  if (spec.n_voters < 1) throw Error(kModule, ErrorKind::usage, "n_voters must be at least 1");
  if (!(spec.valid_fraction >= 0.0 && spec.valid_fraction <= 1.0))
    throw Error(kModule, ErrorKind::usage, "valid_fraction must be in [0, 1]");
  if (!(spec.abandon_fraction >= 0.0 && spec.abandon_fraction <= 1.0))
    throw Error(kModule, ErrorKind::usage, "abandon_fraction must be in [0, 1]");
  if (spec.sigma_factor && !(*spec.sigma_factor > 0.0))
    throw Error(kModule, ErrorKind::usage, "sigma_factor must be > 0");
  if (spec.submission_delay && !(*spec.submission_delay >= 0.0))
    throw Error(kModule, ErrorKind::usage, "submission_delay must be >= 0");
  const Pacing pacing = spec.pacing.value_or(profile.pacing);
  const double window = spec.window_seconds.value_or(profile.window_seconds);

  const std::size_t n = spec.n_voters;
  const auto n_abandon = static_cast<std::size_t>(std::llround(spec.abandon_fraction * static_cast<double>(n)));
  const std::size_t n_voting = n - n_abandon;
  const auto n_valid = static_cast<std::size_t>(std::llround(spec.valid_fraction * static_cast<double>(n_voting)));
  std::vector<SessionKind> kinds(n, SessionKind::spoiled);
  for (std::size_t i = 0; i < n_valid; ++i) kinds[i] = SessionKind::valid;
  for (std::size_t i = n_voting; i < n; ++i) kinds[i] = SessionKind::abandoned;
  {
    std::mt19937_64 master(splitmix64(spec.seed));
    std::shuffle(kinds.begin(), kinds.end(), master);
  }

  std::vector<VoterFlow> flows(n);
  std::vector<std::vector<LabelRow>> labels(n);
  parallel_for(n, spec.threads, [&](std::size_t v) {
    std::mt19937_64 rng(splitmix64(spec.seed ^ splitmix64(v + 1)));
    const SessionKind kind = kinds[v];
    std::optional<Validity> validity;
    if (kind == SessionKind::valid) validity = Validity::valid;
    if (kind == SessionKind::spoiled) validity = Validity::spoiled;
    auto& flow = flows[v];
    flow.voter_id = voter_name(spec.id_prefix, v, n);
    double t = uniform01(rng) * window;
    std::vector<TraceRecord> records;
    for (std::size_t step = 0; step < profile.typical_sequence.size(); ++step) {
      if (step == profile.submission_step && kind == SessionKind::abandoned) break;
      int action_id = profile.typical_sequence[step].front();
      if (step == profile.submission_step)
        action_id = kind == SessionKind::valid ? profile.valid_action : profile.spoiled_action;
      const ActionProfile& action = *profile.find(action_id);
      const bool diverge = spec.divergence && kind == SessionKind::spoiled && profile.divergence &&
                           profile.divergence->action_id == action_id;

      auto make = [&](double ts, Direction dir, std::int64_t len) {
        TraceRecord r;
        r.voter_id = flow.voter_id;
        r.ts = ts;
        r.direction = dir;
        r.payload_len = len;
        r.label_action = action_id;
        r.label_validity = validity;
        return r;
      };

      double ts = t;
      for (std::size_t k = 0; k < action.payloads.size(); ++k) {
        if (k > 0) {
          IatModel m = action.iat[k - 1];
          if (diverge && std::count(profile.divergence->indices.begin(), profile.divergence->indices.end(), k))
            m.sigma *= spec.sigma_factor.value_or(profile.divergence->sigma_factor);
          double iat = lognormal(rng, m.median, m.sigma);
          if (action.mixture && action.mixture->index == k && uniform01(rng) < action.mixture->probability)
            iat += step == profile.submission_step ? spec.submission_delay.value_or(action.mixture->delay)
                                                   : action.mixture->delay;
          ts += iat;
        }
        std::int64_t len = action.payloads[k];
        if (action.jitter[k] > 0)
          len += std::uniform_int_distribution<std::int64_t>(-action.jitter[k], action.jitter[k])(rng);
        records.push_back(make(ts, Direction::outgoing, len));
        if (uniform01(rng) < profile.response.probability) {
          const auto& pl = profile.response.payloads;
          const auto pick = std::uniform_int_distribution<std::size_t>(0, pl.size() - 1)(rng);
          records.push_back(make(ts + lognormal(rng, profile.response.delay_median, profile.response.delay_sigma),
                                 Direction::incoming, pl[pick]));
        }
      }
      if (uniform01(rng) < profile.empty_record_probability)
        records.push_back(make(t + uniform01(rng) * (ts - t), Direction::outgoing, 0));
      labels[v].push_back({flow.voter_id, step, action_id, validity});
      const double gap = std::max(pacing.gap_floor, lognormal(rng, pacing.gap_median, pacing.gap_sigma));
      t = ts + gap;
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const TraceRecord& a, const TraceRecord& b) { return a.ts < b.ts; });
    flow.records = std::move(records);
  });

  Corpus out;
  out.flows = std::move(flows);
  for (auto& l : labels) out.labels.insert(out.labels.end(), l.begin(), l.end());
  return out;
}

std::string write_labels_csv(std::span<const LabelRow> labels) {
  std::string out(kLabelsCsvHeader);
  out += '\n';
  for (const auto& l : labels) {
    out += text::csv_escape(l.voter_id);
    out += ',' + std::to_string(l.burst_index) + ',' + std::to_string(l.action_id) + ',';
    if (l.validity) out += to_string(*l.validity);
    out += '\n';
  }
  return out;
}

std::vector<LabelRow> parse_labels_csv(std::string_view content) {
  const auto lines = text::split_lines(content);
  if (lines.empty() || text::trim(lines[0]) != kLabelsCsvHeader)
    throw Error(kModule, ErrorKind::parse, "labels file must start with header '" + std::string(kLabelsCsvHeader) + "'");
  std::vector<LabelRow> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto f = text::split_csv_line(lines[i]);
    const std::string where = "labels line " + std::to_string(i + 1);
    if (f.size() != 4) throw Error(kModule, ErrorKind::parse, where + ": expected 4 fields");
    LabelRow row;
    row.voter_id = f[0];
    const auto bi = text::parse_int(f[1]);
    const auto ai = text::parse_int(f[2]);
    if (row.voter_id.empty() || !bi || *bi < 0 || !ai) throw Error(kModule, ErrorKind::parse, where + ": bad field");
    row.burst_index = static_cast<std::size_t>(*bi);
    row.action_id = static_cast<int>(*ai);
    if (!text::trim(f[3]).empty()) {
      row.validity = parse_validity(text::trim(f[3]));
      if (!row.validity) throw Error(kModule, ErrorKind::parse, where + ": bad validity '" + f[3] + "'");
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace votetrace
