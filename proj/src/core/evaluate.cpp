#include "evaluate.hpp"

#include <algorithm>
#include <utility>

#include <json.hpp>

#include "error.hpp"
#include "text.hpp"

namespace votetrace {

namespace {
constexpr const char* kModule = "evaluate";
using ojson = nlohmann::ordered_json;

void finish(AccuracyRow& row) {
  row.accuracy = row.total ? static_cast<double>(row.correct) / static_cast<double>(row.total) : 0.0;
}

ojson row_json(const AccuracyRow& r) {
  ojson j;
  j["id"] = r.label;
  j["correct"] = r.correct;
  j["total"] = r.total;
  j["accuracy"] = r.accuracy;
  return j;
}

ojson accuracy_json(const ActionAccuracy& a) {
  ojson j;
  auto& rows = j["rows"] = ojson::array();
  for (const auto& r : a.rows) rows.push_back(row_json(r));
  auto& per = j["per_action"] = ojson::array();
  for (const auto& [id, r] : a.per_action) per.push_back(row_json(r));
  j["average"] = a.average;
  j["overall"] = a.total ? static_cast<double>(a.correct) / static_cast<double>(a.total) : 0.0;
  return j;
}

template <class T>
ojson opt(const std::optional<T>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}
}  // namespace

ActionAccuracy action_accuracy(std::span<const LabelRow> labels, std::span<const ActionAssignment> assignments,
                               Platform platform) {
  std::map<std::pair<std::string, std::size_t>, int> predicted;
  for (const auto& a : assignments) predicted[{a.voter_id, a.burst_index}] = a.action_id;
  ActionAccuracy out;
  for (const auto& l : labels) {
    auto& row = out.per_action[l.action_id];
    row.label = std::to_string(l.action_id);
    row.ids = {l.action_id};
    ++row.total;
    ++out.total;
    const auto it = predicted.find({l.voter_id, l.burst_index});
    if (it != predicted.end() && it->second == l.action_id) {
      ++row.correct;
      ++out.correct;
    }
  }
  for (auto& [id, row] : out.per_action) finish(row);

  // Table layout follows the platform's typical sequence; ids outside it
  // are appended in numeric order.
  std::set<int> placed;
  for (const auto& step : typical_sequence(platform)) {
    AccuracyRow row;
    for (int id : step) {
      if (!row.label.empty()) row.label += '/';
      row.label += std::to_string(id);
      row.ids.push_back(id);
      placed.insert(id);
      if (auto it = out.per_action.find(id); it != out.per_action.end()) {
        row.correct += it->second.correct;
        row.total += it->second.total;
      }
    }
    finish(row);
    if (row.total) out.rows.push_back(std::move(row));
  }
  for (const auto& [id, row] : out.per_action)
    if (!placed.count(id)) out.rows.push_back(row);
  if (!out.rows.empty()) {
    double sum = 0.0;
    for (const auto& r : out.rows) sum += r.accuracy;
    out.average = sum / static_cast<double>(out.rows.size());
  }
  return out;
}

std::map<std::string, Validity> voter_validity(std::span<const LabelRow> labels) {
  std::map<std::string, Validity> out;
  for (const auto& l : labels) {
    if (!l.validity) continue;
    auto [it, inserted] = out.emplace(l.voter_id, *l.validity);
    if (!inserted && it->second != *l.validity)
      throw Error(kModule, ErrorKind::data, "voter '" + l.voter_id + "' has conflicting validity labels");
  }
  return out;
}

ValidityMetrics validity_metrics(std::span<const LabelRow> labels, std::span<const ValidityVerdict> verdicts) {
  const auto truth = voter_validity(labels);
  std::map<std::string, VerdictKind> got;
  for (const auto& v : verdicts) got[v.voter_id] = v.verdict;
  ValidityMetrics m;
  for (const auto& [voter, t] : truth) {
    ++m.labeled;
    const auto it = got.find(voter);
    const VerdictKind v = it == got.end() ? VerdictKind::undecidable : it->second;
    if (v == VerdictKind::undecidable) ++m.undecidable;
    const bool truth_spoiled = t == Validity::spoiled;
    if ((v == VerdictKind::valid && !truth_spoiled) || (v == VerdictKind::spoiled && truth_spoiled)) ++m.correct;
    if (v == VerdictKind::spoiled && truth_spoiled) ++m.true_positive;
    if (v == VerdictKind::spoiled && !truth_spoiled) ++m.false_positive;
    if (v != VerdictKind::spoiled && truth_spoiled) ++m.false_negative;
  }
  if (m.labeled) m.accuracy = static_cast<double>(m.correct) / static_cast<double>(m.labeled);
  if (m.true_positive + m.false_positive)
    m.precision = static_cast<double>(m.true_positive) / static_cast<double>(m.true_positive + m.false_positive);
  if (m.true_positive + m.false_negative)
    m.recall = static_cast<double>(m.true_positive) / static_cast<double>(m.true_positive + m.false_negative);
  return m;
}

SubmissionSetCheck submission_set_check(std::span<const LabelRow> labels, const std::set<std::string>& predicted) {
  std::set<std::string> truth;
  for (const auto& l : labels)
    if (l.validity) truth.insert(l.voter_id);
  SubmissionSetCheck c;
  c.predicted = predicted.size();
  c.truth = truth.size();
  for (const auto& v : truth)
    if (!predicted.count(v)) ++c.missing;
  for (const auto& v : predicted)
    if (!truth.count(v)) ++c.extra;
  c.exact = c.missing == 0 && c.extra == 0;
  return c;
}

MetricsReport evaluate_against_truth(std::span<const LabelRow> labels, Platform platform,
                                     std::span<const ActionAssignment> set_assignments,
                                     std::span<const ActionAssignment> cluster_assignments,
                                     std::span<const ValidityVerdict> verdicts,
                                     const std::optional<std::set<std::string>>& submitters) {
  MetricsReport r;
  if (!set_assignments.empty()) r.set_model = action_accuracy(labels, set_assignments, platform);
  if (!cluster_assignments.empty()) r.cluster_model = action_accuracy(labels, cluster_assignments, platform);
  if (!verdicts.empty()) r.validity = validity_metrics(labels, verdicts);
  if (submitters) r.submission_set = submission_set_check(labels, *submitters);
  return r;
}

std::string metrics_to_json(const MetricsReport& report) {
  ojson j;
  j["set_model"] = report.set_model ? accuracy_json(*report.set_model) : ojson(nullptr);
  j["cluster_model"] = report.cluster_model ? accuracy_json(*report.cluster_model) : ojson(nullptr);
  if (report.validity) {
    const auto& v = *report.validity;
    ojson vj;
    vj["labeled"] = v.labeled;
    vj["correct"] = v.correct;
    vj["undecidable"] = v.undecidable;
    vj["accuracy"] = v.accuracy;
    vj["precision"] = opt(v.precision);
    vj["recall"] = opt(v.recall);
    j["validity"] = vj;
  } else {
    j["validity"] = nullptr;
  }
  if (report.submission_set) {
    const auto& s = *report.submission_set;
    j["submission_set"] = {{"exact", s.exact}, {"predicted", s.predicted}, {"truth", s.truth},
                           {"missing", s.missing}, {"extra", s.extra}};
  } else {
    j["submission_set"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string write_assignments_csv(std::span<const ActionAssignment> assignments) {
  std::string out = "voter_id,burst_index,action_id,rule\n";
  for (const auto& a : assignments)
    out += text::csv_escape(a.voter_id) + "," + std::to_string(a.burst_index) + "," + std::to_string(a.action_id) +
           "," + to_string(a.rule) + "\n";
  return out;
}

std::vector<ActionAssignment> parse_assignments_csv(std::string_view content) {
  const auto lines = text::split_lines(content);
  if (lines.empty()) throw Error(kModule, ErrorKind::parse, "assignments file is empty");
  const auto header = text::split_csv_line(lines[0]);
  auto column = [&](const char* name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw Error(kModule, ErrorKind::parse, std::string("assignments header lacks column '") + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t cv = column("voter_id"), cb = column("burst_index"), ca = column("action_id");
  const std::size_t need = std::max({cv, cb, ca}) + 1;
  std::vector<ActionAssignment> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto f = text::split_csv_line(lines[i]);
    const auto bi = f.size() >= need ? text::parse_int(f[cb]) : std::nullopt;
    const auto ai = f.size() >= need ? text::parse_int(f[ca]) : std::nullopt;
    if (!bi || !ai || *bi < 0)
      throw Error(kModule, ErrorKind::parse, "assignments line " + std::to_string(i + 1) + ": bad row");
    ActionAssignment a;
    a.voter_id = f[cv];
    a.burst_index = static_cast<std::size_t>(*bi);
    a.action_id = static_cast<int>(*ai);
    out.push_back(std::move(a));
  }
  return out;
}

std::string write_verdicts_csv(std::span<const ValidityVerdict> verdicts) {
  std::string out = "voter_id,verdict,basis\n";
  for (const auto& v : verdicts)
    out += text::csv_escape(v.voter_id) + "," + to_string(v.verdict) + "," + to_string(v.basis) + "\n";
  return out;
}

std::vector<ValidityVerdict> parse_verdicts_csv(std::string_view content) {
  const auto lines = text::split_lines(content);
  if (lines.empty() || text::trim(lines[0]) != "voter_id,verdict,basis")
    throw Error(kModule, ErrorKind::parse, "verdict file must start with header voter_id,verdict,basis");
  std::vector<ValidityVerdict> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto f = text::split_csv_line(lines[i]);
    if (f.size() != 3) throw Error(kModule, ErrorKind::parse, "verdict line " + std::to_string(i + 1) + ": bad row");
    ValidityVerdict v;
    v.voter_id = f[0];
    if (f[1] == "valid") v.verdict = VerdictKind::valid;
    else if (f[1] == "spoiled") v.verdict = VerdictKind::spoiled;
    else if (f[1] == "undecidable") v.verdict = VerdictKind::undecidable;
    else throw Error(kModule, ErrorKind::parse, "verdict line " + std::to_string(i + 1) + ": bad verdict");
    if (f[2] == "payload_rule") v.basis = VerdictBasis::payload_rule;
    else if (f[2] == "statistical") v.basis = VerdictBasis::statistical;
    else if (f[2] == "none") v.basis = VerdictBasis::none;
    else throw Error(kModule, ErrorKind::parse, "verdict line " + std::to_string(i + 1) + ": bad basis");
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace votetrace
