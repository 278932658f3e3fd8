#include "trace.hpp"

#include <algorithm>
#include <unordered_map>

#include <json.hpp>

#include "error.hpp"
#include "text.hpp"

namespace votetrace {

namespace {

constexpr const char* kModule = "ingest";

struct RowError {
  std::size_t line;
  std::string what;
};

[[noreturn]] void throw_row_errors(const std::vector<RowError>& errors) {
  std::string msg = std::to_string(errors.size()) + " malformed row(s)";
  const std::size_t shown = std::min<std::size_t>(errors.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) {
    msg += "; row " + std::to_string(errors[i].line) + ": " + errors[i].what;
  }
  if (shown < errors.size()) msg += "; ...";
  throw Error(kModule, ErrorKind::parse, msg);
}

std::optional<Direction> parse_direction(std::string_view token) {
  if (token == "out") return Direction::outgoing;
  if (token == "in") return Direction::incoming;
  return std::nullopt;
}

// Validates the typed fields of one record; returns an error string or empty.
std::string build_record(TraceRecord& rec, std::string voter, std::string_view ts,
                         std::string_view direction, std::string_view payload,
                         std::string_view action, std::string_view validity) {
  if (voter.empty()) return "empty voter_id";
  rec.voter_id = std::move(voter);
  auto t = text::parse_double(ts);
  if (!t) return "unparseable ts '" + std::string(ts) + "'";
  if (*t < 0.0) return "negative ts";
  rec.ts = *t;
  auto d = parse_direction(text::trim(direction));
  if (!d) return "unknown direction '" + std::string(direction) + "'";
  rec.direction = *d;
  auto p = text::parse_int(payload);
  if (!p) return "unparseable payload_len '" + std::string(payload) + "'";
  if (*p < 0) return "negative payload_len";
  rec.payload_len = *p;
  if (!text::trim(action).empty()) {
    auto a = text::parse_int(action);
    if (!a) return "unparseable label_action '" + std::string(action) + "'";
    rec.label_action = static_cast<int>(*a);
  }
  if (!text::trim(validity).empty()) {
    auto v = parse_validity(text::trim(validity));
    if (!v) return "unknown label_validity '" + std::string(validity) + "'";
    rec.label_validity = *v;
  }
  return {};
}

}  // namespace

std::vector<double> VoterFlow::iats() const {
  std::vector<double> out;
  if (records.size() < 2) return out;
  out.reserve(records.size() - 1);
  for (std::size_t k = 0; k + 1 < records.size(); ++k) {
    out.push_back(records[k + 1].ts - records[k].ts);
  }
  return out;
}

const char* to_string(Direction d) { return d == Direction::outgoing ? "out" : "in"; }
const char* to_string(Validity v) { return v == Validity::valid ? "valid" : "spoiled"; }

std::optional<Validity> parse_validity(std::string_view token) {
  if (token == "valid") return Validity::valid;
  if (token == "spoiled") return Validity::spoiled;
  return std::nullopt;
}

TraceFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".ndjson") return TraceFormat::jsonl;
  return TraceFormat::csv;
}

std::vector<VoterFlow> group_records(std::vector<TraceRecord> records) {
  std::vector<VoterFlow> flows;
  std::unordered_map<std::string, std::size_t> index;
  for (auto& rec : records) {
    auto [it, inserted] = index.try_emplace(rec.voter_id, flows.size());
    if (inserted) flows.push_back(VoterFlow{rec.voter_id, {}});
    flows[it->second].records.push_back(std::move(rec));
  }
  for (auto& f : flows) {
    std::stable_sort(f.records.begin(), f.records.end(),
                     [](const TraceRecord& a, const TraceRecord& b) { return a.ts < b.ts; });
  }
  return flows;
}

std::vector<VoterFlow> parse_trace_csv(std::string_view content) {
  const auto lines = text::split_lines(content);
  std::size_t first = 0;
  while (first < lines.size() && text::trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw Error(kModule, ErrorKind::parse, "missing CSV header");

  const auto header = text::split_csv_line(lines[first]);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[text::trim(header[i])] = i;
  for (const char* required : {"voter_id", "ts", "direction", "payload_len"}) {
    if (!col.count(required)) {
      throw Error(kModule, ErrorKind::parse, std::string("missing required column '") + required + "'");
    }
  }
  const auto find = [&](const char* name) -> std::optional<std::size_t> {
    auto it = col.find(name);
    if (it == col.end()) return std::nullopt;
    return it->second;
  };
  const auto c_action = find("label_action");
  const auto c_validity = find("label_validity");

  std::vector<TraceRecord> records;
  std::vector<RowError> errors;
  for (std::size_t li = first + 1; li < lines.size(); ++li) {
    if (text::trim(lines[li]).empty()) continue;
    const auto fields = text::split_csv_line(lines[li]);
    if (fields.size() != header.size()) {
      errors.push_back({li + 1, "expected " + std::to_string(header.size()) + " fields, got " +
                                    std::to_string(fields.size())});
      continue;
    }
    TraceRecord rec;
    auto err = build_record(rec, fields[col["voter_id"]], fields[col["ts"]], fields[col["direction"]],
                            fields[col["payload_len"]], c_action ? fields[*c_action] : "",
                            c_validity ? fields[*c_validity] : "");
    if (!err.empty()) {
      errors.push_back({li + 1, std::move(err)});
      continue;
    }
    records.push_back(std::move(rec));
  }
  if (!errors.empty()) throw_row_errors(errors);
  return group_records(std::move(records));
}

std::vector<VoterFlow> parse_trace_jsonl(std::string_view content) {
  using nlohmann::json;
  const auto lines = text::split_lines(content);
  std::vector<TraceRecord> records;
  std::vector<RowError> errors;
  const auto field_text = [](const json& obj, const char* key, bool& missing) -> std::string {
    auto it = obj.find(key);
    if (it == obj.end()) {
      missing = true;
      return {};
    }
    if (it->is_null()) return {};
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
    if (it->is_number()) return text::format_double(it->get<double>());
    return it->dump();
  };
  for (std::size_t li = 0; li < lines.size(); ++li) {
    if (text::trim(lines[li]).empty()) continue;
    json obj;
    try {
      obj = json::parse(lines[li]);
    } catch (const json::parse_error& e) {
      errors.push_back({li + 1, std::string("invalid JSON: ") + e.what()});
      continue;
    }
    if (!obj.is_object()) {
      errors.push_back({li + 1, "not a JSON object"});
      continue;
    }
    bool missing = false;
    auto voter = field_text(obj, "voter_id", missing);
    auto ts = field_text(obj, "ts", missing);
    auto dir = field_text(obj, "direction", missing);
    auto len = field_text(obj, "payload_len", missing);
    if (missing) {
      errors.push_back({li + 1, "missing required key"});
      continue;
    }
    bool ignore = false;
    auto action = field_text(obj, "label_action", ignore);
    auto validity = field_text(obj, "label_validity", ignore);
    TraceRecord rec;
    auto err = build_record(rec, voter, ts, dir, len, action, validity);
    if (!err.empty()) {
      errors.push_back({li + 1, std::move(err)});
      continue;
    }
    records.push_back(std::move(rec));
  }
  if (!errors.empty()) throw_row_errors(errors);
  return group_records(std::move(records));
}

std::vector<VoterFlow> load_trace(const std::filesystem::path& path, TraceFormat format) {
  const std::string content = text::read_file(path, kModule);
  return format == TraceFormat::jsonl ? parse_trace_jsonl(content) : parse_trace_csv(content);
}

std::string write_trace_csv(std::span<const VoterFlow> flows) {
  std::string out(kTraceCsvHeader);
  out += '\n';
  for (const auto& flow : flows) {
    for (const auto& r : flow.records) {
      out += text::csv_escape(r.voter_id);
      out += ',';
      out += text::format_double(r.ts);
      out += ',';
      out += to_string(r.direction);
      out += ',';
      out += std::to_string(r.payload_len);
      out += ',';
      if (r.label_action) out += std::to_string(*r.label_action);
      out += ',';
      if (r.label_validity) out += to_string(*r.label_validity);
      out += '\n';
    }
  }
  return out;
}

std::vector<VoterFlow> filter_analysis_population(std::span<const VoterFlow> flows) {
  std::vector<VoterFlow> out;
  out.reserve(flows.size());
  for (const auto& f : flows) {
    VoterFlow kept{f.voter_id, {}};
    for (const auto& r : f.records) {
      if (r.direction == Direction::outgoing && r.payload_len > 0) kept.records.push_back(r);
    }
    out.push_back(std::move(kept));
  }
  return out;
}

std::vector<std::string> empty_flow_ids(std::span<const VoterFlow> flows) {
  std::vector<std::string> ids;
  for (const auto& f : flows) {
    if (f.records.empty()) ids.push_back(f.voter_id);
  }
  return ids;
}

}  // namespace votetrace
