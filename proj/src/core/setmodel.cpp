#include "setmodel.hpp"

#include <algorithm>

#include <json.hpp>

#include "error.hpp"

namespace votetrace {

namespace {

constexpr const char* kModule = "setmodel";

struct Candidate {
  PayloadSet set;
  int action_id;
  PayloadSet shared;
  PayloadSet max_overlap;
};

// T_i and T*_i of entry i against every other live entry. Ties in the
// most-overlapping partner go to the lowest index.
void compute_subsets(std::vector<Candidate>& entries, const std::vector<bool>& live) {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!live[i]) continue;
    PayloadSet others;
    std::size_t best_overlap = 0;
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (k == i || !live[k]) continue;
      others = set_union(others, entries[k].set);
      const std::size_t overlap = intersection_size(entries[i].set, entries[k].set);
      if (!best || overlap > best_overlap) {
        best = k;
        best_overlap = overlap;
      }
    }
    entries[i].shared = set_intersection(entries[i].set, others);
    entries[i].max_overlap = best ? set_intersection(entries[i].set, entries[*best].set) : PayloadSet{};
  }
}

}  // namespace

const char* to_string(Platform p) {
  switch (p) {
    case Platform::eligo_like: return "eligo_like";
    case Platform::polyas_like: return "polyas_like";
    case Platform::custom: return "custom";
  }
  return "custom";
}

std::optional<Platform> parse_platform(std::string_view token) {
  if (token == "eligo_like" || token == "eligo") return Platform::eligo_like;
  if (token == "polyas_like" || token == "polyas") return Platform::polyas_like;
  if (token == "custom") return Platform::custom;
  return std::nullopt;
}

const char* to_string(RuleFired r) {
  switch (r) {
    case RuleFired::exact: return "exact";
    case RuleFired::distinctive: return "distinctive";
    case RuleFired::overlap_threshold: return "overlap_threshold";
    case RuleFired::none: return "none";
  }
  return "none";
}

const CatalogAction* ActionCatalog::find(int action_id) const {
  for (const auto& a : actions) {
    if (a.action_id == action_id) return &a;
  }
  return nullptr;
}

void refresh_catalog_subsets(ActionCatalog& catalog) {
  auto& acts = catalog.actions;
  for (std::size_t i = 0; i < acts.size(); ++i) {
    PayloadSet others;
    std::size_t best_overlap = 0;
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < acts.size(); ++k) {
      if (k == i) continue;
      others = set_union(others, acts[k].payload_set);
      const std::size_t overlap = intersection_size(acts[i].payload_set, acts[k].payload_set);
      if (!best || overlap > best_overlap) {
        best = k;
        best_overlap = overlap;
      }
    }
    acts[i].shared_subset = set_intersection(acts[i].payload_set, others);
    acts[i].max_overlap_subset = best ? set_intersection(acts[i].payload_set, acts[*best].payload_set) : PayloadSet{};
    acts[i].distinctive_set = set_difference(acts[i].payload_set, others);
  }
}

ActionCatalog build_catalog(std::span<const PayloadSet> reference_sets, std::span<const int> action_ids,
                            Platform platform) {
  if (reference_sets.empty()) throw Error(kModule, ErrorKind::data, "empty reference session");
  if (!action_ids.empty() && action_ids.size() != reference_sets.size()) {
    throw Error(kModule, ErrorKind::usage, "action id count does not match reference burst count");
  }

  // (b) deduplicate identical sets, first occurrence wins.
  std::vector<Candidate> entries;
  for (std::size_t i = 0; i < reference_sets.size(); ++i) {
    const auto& s = reference_sets[i];
    const bool seen = std::any_of(entries.begin(), entries.end(), [&](const Candidate& c) { return c.set == s; });
    if (seen) continue;
    const int id = action_ids.empty() ? static_cast<int>(entries.size()) : action_ids[i];
    entries.push_back(Candidate{s, id, {}, {}});
  }

  // (c) shared and max-overlap subsets over the deduplicated list.
  std::vector<bool> live(entries.size(), true);
  compute_subsets(entries, live);

  // (d) Rules 1 and 2 depend only on the entry itself and are settled first;
  // rules 3 and 4 then scan the undecided entries in index order. A rule-3
  // merge removes its partner unless the partner is already a unique action.
  enum class State { undecided, unique, removed };
  std::vector<State> state(entries.size(), State::undecided);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.shared.empty() || e.set.size() == e.max_overlap.size()) state[i] = State::unique;
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (state[i] != State::undecided) continue;
    auto& e = entries[i];
    if (e.shared.size() == e.max_overlap.size()) {
      std::optional<std::size_t> partner;
      for (std::size_t l = 0; l < entries.size(); ++l) {
        if (l == i || state[l] == State::removed) continue;
        if (entries[l].max_overlap == e.max_overlap) {
          partner = l;
          break;
        }
      }
      if (partner) {
        const std::size_t l = *partner;
        const bool keep_i = entries[i].set.size() > entries[l].set.size() ||
                            (entries[i].set.size() == entries[l].set.size() && i < l);
        const std::size_t winner = keep_i ? i : l;
        const std::size_t loser = keep_i ? l : i;
        entries[winner].set = set_union(entries[i].set, entries[l].set);
        state[winner] = State::unique;
        if (state[loser] != State::unique) state[loser] = State::removed;
        continue;
      }
    }
    if (e.shared.size() > e.max_overlap.size()) state[i] = State::unique;
  }

  ActionCatalog catalog;
  catalog.platform = platform;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (state[i] != State::unique) continue;
    const bool dup = std::any_of(catalog.actions.begin(), catalog.actions.end(),
                                 [&](const CatalogAction& a) { return a.payload_set == entries[i].set; });
    if (dup) continue;
    catalog.actions.push_back(CatalogAction{entries[i].action_id, entries[i].set, {}, {}, {}});
  }
  if (catalog.actions.empty()) {
    throw Error(kModule, ErrorKind::data, "reference session yields no unique action");
  }
  refresh_catalog_subsets(catalog);
  return catalog;
}

ActionCatalog build_catalog(std::span<const ActivityBurst> reference_bursts, std::span<const int> action_ids,
                            Platform platform) {
  std::vector<PayloadSet> sets;
  sets.reserve(reference_bursts.size());
  for (const auto& b : reference_bursts) sets.push_back(b.payload_set);
  return build_catalog(sets, action_ids, platform);
}

ActionAssignment classify_payload_set(const PayloadSet& observed, const ActionCatalog& catalog) {
  ActionAssignment out;
  for (const auto& a : catalog.actions) {
    if (a.payload_set == observed) {
      out.action_id = a.action_id;
      out.rule = RuleFired::exact;
      return out;
    }
  }

  // Among several satisfying actions, the largest overlap wins, then the
  // lowest action id.
  const auto pick = [&](auto&& satisfies) -> const CatalogAction* {
    const CatalogAction* best = nullptr;
    std::size_t best_overlap = 0;
    for (const auto& a : catalog.actions) {
      if (!satisfies(a)) continue;
      const std::size_t overlap = intersection_size(observed, a.payload_set);
      if (!best || overlap > best_overlap || (overlap == best_overlap && a.action_id < best->action_id)) {
        best = &a;
        best_overlap = overlap;
      }
    }
    return best;
  };

  if (const auto* a = pick([&](const CatalogAction& c) { return intersects(observed, c.distinctive_set); })) {
    out.action_id = a->action_id;
    out.rule = RuleFired::distinctive;
    return out;
  }
  if (const auto* a = pick([&](const CatalogAction& c) {
        return intersection_size(observed, c.payload_set) >= c.max_overlap_subset.size() + 1;
      })) {
    out.action_id = a->action_id;
    out.rule = RuleFired::overlap_threshold;
    return out;
  }
  return out;
}

ActionAssignment classify_burst(const ActivityBurst& burst, const ActionCatalog& catalog) {
  auto out = classify_payload_set(burst.payload_set, catalog);
  out.voter_id = burst.voter_id;
  out.burst_index = burst.burst_index;
  return out;
}

TypicalSequence typical_sequence(Platform platform) {
  switch (platform) {
    case Platform::eligo_like: return {{0}, {1}, {2}, {4}, {3, 7}, {5}, {6}};
    case Platform::polyas_like: return {{0}, {1}, {2}, {3}};
    case Platform::custom: return {};
  }
  return {};
}

std::vector<int> submission_action_ids(Platform platform) {
  switch (platform) {
    case Platform::eligo_like: return {3, 7};
    case Platform::polyas_like: return {3};
    case Platform::custom: return {};
  }
  return {};
}

namespace {

std::string step_text(const std::vector<int>& step) {
  std::string s;
  for (std::size_t i = 0; i < step.size(); ++i) {
    if (i) s += '|';
    s += std::to_string(step[i]);
  }
  return s;
}

}  // namespace

SessionClassification classify_session(std::span<const ActivityBurst> bursts, const ActionCatalog& catalog,
                                       const TypicalSequence& expected) {
  SessionClassification out;
  for (const auto& b : bursts) out.assignments.push_back(classify_burst(b, catalog));
  auto& rep = out.report;
  if (!bursts.empty()) rep.voter_id = bursts.front().voter_id;
  for (const auto& a : out.assignments) rep.sequence.push_back(a.action_id);

  const bool all_unknown = std::all_of(rep.sequence.begin(), rep.sequence.end(),
                                       [](int id) { return id == kUnknownAction; });
  if (rep.sequence.empty() || all_unknown) {
    rep.unclassifiable = true;
    rep.deviations.push_back("unclassifiable session");
    return out;
  }
  if (expected.empty()) return out;

  std::size_t step = 0;
  for (std::size_t p = 0; p < rep.sequence.size(); ++p) {
    const int id = rep.sequence[p];
    if (id == kUnknownAction) {
      rep.deviations.push_back("burst " + std::to_string(p) + " unclassified");
      ++step;
      continue;
    }
    if (step >= expected.size()) {
      rep.deviations.push_back("unexpected action " + std::to_string(id) + " after sequence end");
      continue;
    }
    const auto& allowed = expected[step];
    if (std::find(allowed.begin(), allowed.end(), id) != allowed.end()) {
      ++step;
      continue;
    }
    rep.deviations.push_back("position " + std::to_string(p) + ": expected " + step_text(allowed) + ", got " +
                             std::to_string(id));
    // Resynchronize on the assigned action if it appears later.
    for (std::size_t s = step + 1; s < expected.size(); ++s) {
      const auto& later = expected[s];
      if (std::find(later.begin(), later.end(), id) != later.end()) {
        step = s;
        break;
      }
    }
    ++step;
  }
  if (step < expected.size()) {
    const int last = rep.sequence.back();
    rep.deviations.push_back("sequence truncated after " +
                             (last == kUnknownAction ? std::string("unknown") : std::to_string(last)));
  }
  return out;
}

std::string catalog_to_json(const ActionCatalog& catalog) {
  nlohmann::ordered_json j;
  j["platform"] = to_string(catalog.platform);
  j["actions"] = nlohmann::ordered_json::array();
  for (const auto& a : catalog.actions) {
    nlohmann::ordered_json aj;
    aj["action_id"] = a.action_id;
    aj["payload_set"] = a.payload_set;
    aj["shared_subset"] = a.shared_subset;
    aj["max_overlap_subset"] = a.max_overlap_subset;
    aj["distinctive_set"] = a.distinctive_set;
    j["actions"].push_back(std::move(aj));
  }
  return j.dump(2) + "\n";
}

ActionCatalog catalog_from_json(std::string_view json_text) {
  ActionCatalog c;
  try {
    const auto j = nlohmann::json::parse(json_text);
    const auto platform = parse_platform(j.at("platform").get<std::string>());
    if (!platform) throw Error(kModule, ErrorKind::parse, "unknown platform in catalog");
    c.platform = *platform;
    for (const auto& aj : j.at("actions")) {
      CatalogAction a;
      a.action_id = aj.at("action_id").get<int>();
      a.payload_set = make_payload_set(aj.at("payload_set").get<std::vector<std::int64_t>>());
      c.actions.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(kModule, ErrorKind::parse, std::string("invalid catalog JSON: ") + e.what());
  }
  if (c.actions.empty()) throw Error(kModule, ErrorKind::data, "catalog has no actions");
  refresh_catalog_subsets(c);
  return c;
}

}  // namespace votetrace
