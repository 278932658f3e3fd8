#include "signature.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "error.hpp"
#include "text.hpp"

namespace votetrace {

namespace {
constexpr const char* kModule = "signature";
}

std::vector<double> normalized_trend(std::vector<double> offsets, std::size_t window, std::size_t length) {
  if (window < 1) throw Error(kModule, ErrorKind::usage, "rolling window must be at least 1");
  if (length < 2) throw Error(kModule, ErrorKind::usage, "curve length must be at least 2");
  std::vector<double> zeros(length, 0.0);
  if (offsets.empty()) return zeros;

  std::sort(offsets.begin(), offsets.end());
  const std::size_t n = offsets.size();
  std::vector<double> smooth(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += offsets[i];
    if (i >= window) sum -= offsets[i - window];
    const std::size_t count = std::min(i + 1, window);
    smooth[i] = sum / static_cast<double>(count);
  }
  // Running sums drift; the mean of a sorted window cannot decrease.
  for (std::size_t i = 1; i < n; ++i) smooth[i] = std::max(smooth[i], smooth[i - 1]);

  const double lo = smooth.front();
  const double hi = smooth.back();
  if (!(hi > lo)) return zeros;
  for (auto& v : smooth) v = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
  if (n == 1) return zeros;

  std::vector<double> out(length);
  for (std::size_t j = 0; j < length; ++j) {
    const double x = static_cast<double>(j) * static_cast<double>(n - 1) / static_cast<double>(length - 1);
    const auto k = std::min(static_cast<std::size_t>(x), n - 2);
    const double frac = x - static_cast<double>(k);
    out[j] = smooth[k] + frac * (smooth[k + 1] - smooth[k]);
  }
  out.back() = smooth.back();
  return out;
}

std::pair<double, double> jump_in_window(std::span<const double> curve, double lo, double hi) {
  if (curve.size() < 2) return {0.0, 0.0};
  const double denom = static_cast<double>(curve.size() - 1);
  double best = 0.0;
  double position = 0.0;
  bool found = false;
  for (std::size_t j = 0; j + 1 < curve.size(); ++j) {
    const double p0 = static_cast<double>(j) / denom;
    const double p1 = static_cast<double>(j + 1) / denom;
    if (p0 < lo || p1 > hi) continue;
    const double d = curve[j + 1] - curve[j];
    if (!found || d > best) {
      best = d;
      position = static_cast<double>(j + 1) / static_cast<double>(curve.size());
      found = true;
    }
  }
  return {std::max(best, 0.0), position};
}

ActionSignature build_signature(std::span<const ActivityBurst* const> bursts, int action_id,
                                const SignatureOptions& options) {
  std::set<std::string> voters;
  std::map<std::size_t, std::vector<double>> groups;
  for (const auto* b : bursts) {
    voters.insert(b->voter_id);
    for (std::size_t k = 1; k < b->records.size(); ++k) {
      groups[k].push_back(b->records[k].ts - b->start_ts);
    }
  }
  if (voters.size() < 2) {
    throw Error(kModule, ErrorKind::data,
                "action " + std::to_string(action_id) + " needs at least 2 contributing voters");
  }

  ActionSignature sig;
  sig.action_id = action_id;
  sig.voters = voters.size();
  sig.curve.assign(options.length, 0.0);
  for (auto& [index, offsets] : groups) {
    sig.support += offsets.size();
    const auto trend = normalized_trend(std::move(offsets), options.window, options.length);
    for (std::size_t j = 0; j < options.length; ++j) sig.curve[j] += trend[j];
  }
  if (!groups.empty()) {
    for (auto& v : sig.curve) v /= static_cast<double>(groups.size());
  }
  const auto [score, position] = jump_in_window(sig.curve, options.central_lo, options.central_hi);
  sig.jump_score = score;
  sig.jump_position = position;
  return sig;
}

SubmissionVerdict detect_submission(std::span<const ActionSignature> signatures, const SignatureOptions& options) {
  SubmissionVerdict v;
  v.threshold = options.threshold;
  std::optional<int> best;
  double best_score = 0.0;
  for (const auto& s : signatures) {
    const double score = jump_in_window(s.curve, options.central_lo, options.central_hi).first;
    v.scores[s.action_id] = score;
    if (!best || score > best_score) {
      best = s.action_id;
      best_score = score;
    }
  }
  v.jump_score = best_score;
  if (best && best_score > options.threshold) v.detected_action_id = best;
  return v;
}

std::map<int, std::vector<const ActivityBurst*>> group_by_action(const CorpusSegmentation& seg,
                                                                 std::span<const ActionAssignment> assignments) {
  std::map<std::pair<std::string, std::size_t>, int> assigned;
  for (const auto& a : assignments) assigned[{a.voter_id, a.burst_index}] = a.action_id;
  std::map<int, std::vector<const ActivityBurst*>> groups;
  for (const auto& v : seg.voters) {
    for (const auto& b : v.bursts) {
      auto it = assigned.find({b.voter_id, b.burst_index});
      if (it == assigned.end() || it->second == kUnknownAction) continue;
      groups[it->second].push_back(&b);
    }
  }
  return groups;
}

std::vector<ActionSignature> build_signatures(const std::map<int, std::vector<const ActivityBurst*>>& groups,
                                              const SignatureOptions& options) {
  std::vector<ActionSignature> out;
  for (const auto& [action, bursts] : groups) {
    std::set<std::string> voters;
    for (const auto* b : bursts) voters.insert(b->voter_id);
    if (voters.size() < 2) continue;
    out.push_back(build_signature(bursts, action, options));
  }
  return out;
}

SubmissionTimes voter_submission_times(const SubmissionVerdict& verdict, std::span<const ActionAssignment> assignments,
                                       const CorpusSegmentation& seg) {
  SubmissionTimes out;
  std::map<std::pair<std::string, std::size_t>, int> assigned;
  for (const auto& a : assignments) assigned[{a.voter_id, a.burst_index}] = a.action_id;
  for (const auto& v : seg.voters) {
    std::optional<double> when;
    if (verdict.detected_action_id) {
      for (const auto& b : v.bursts) {
        auto it = assigned.find({b.voter_id, b.burst_index});
        if (it != assigned.end() && it->second == *verdict.detected_action_id) {
          when = b.start_ts;
          break;
        }
      }
    }
    if (when) {
      out.submitters.emplace_back(v.voter_id, *when);
    } else {
      out.non_submitters.push_back(v.voter_id);
    }
  }
  return out;
}

std::string write_curves_csv(std::span<const ActionSignature> signatures) {
  std::string out = "action_id,position,value\n";
  for (const auto& s : signatures) {
    const double denom = s.curve.size() > 1 ? static_cast<double>(s.curve.size() - 1) : 1.0;
    for (std::size_t j = 0; j < s.curve.size(); ++j) {
      out += std::to_string(s.action_id) + ',' + text::format_fixed(static_cast<double>(j) / denom, 6) + ',' +
             text::format_fixed(s.curve[j], 9) + '\n';
    }
  }
  return out;
}

std::string verdict_to_json(const SubmissionVerdict& verdict, std::span<const ActionSignature> signatures) {
  nlohmann::ordered_json j;
  if (verdict.detected_action_id) {
    j["detected_action_id"] = *verdict.detected_action_id;
    j["verdict"] = "submission signature detected";
  } else {
    j["detected_action_id"] = nullptr;
    j["verdict"] = "no submission signature detected";
  }
  j["jump_score"] = verdict.jump_score;
  j["threshold"] = verdict.threshold;
  j["actions"] = nlohmann::ordered_json::array();
  for (const auto& s : signatures) {
    j["actions"].push_back({{"action_id", s.action_id},
                            {"jump_score", s.jump_score},
                            {"jump_position", s.jump_position},
                            {"support", s.support},
                            {"voters", s.voters}});
  }
  return j.dump(2) + "\n";
}

}  // namespace votetrace
