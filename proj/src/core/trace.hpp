#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace votetrace {

enum class Direction { outgoing, incoming };
enum class Validity { valid, spoiled };

// One observed TLS application-data record.
struct TraceRecord {
  std::string voter_id;
  double ts = 0.0;  // seconds since capture start
  Direction direction = Direction::outgoing;
  std::int64_t payload_len = 0;
  // Ground truth, present only in synthetic or lab traces. Attack code never
  // reads these; evaluation does.
  std::optional<int> label_action;
  std::optional<Validity> label_validity;

  bool operator==(const TraceRecord&) const = default;
};

struct VoterFlow {
  std::string voter_id;
  std::vector<TraceRecord> records;  // stable-sorted by ts

  // iats()[k] = records[k+1].ts - records[k].ts
  std::vector<double> iats() const;
  bool empty() const { return records.empty(); }
};

enum class TraceFormat { csv, jsonl };

const char* to_string(Direction d);
const char* to_string(Validity v);
std::optional<Validity> parse_validity(std::string_view token);

// Canonical header of the CSV trace schema.
inline constexpr std::string_view kTraceCsvHeader =
    "voter_id,ts,direction,payload_len,label_action,label_validity";

TraceFormat format_from_path(const std::filesystem::path& path);

// One flow per distinct voter_id, in order of first appearance in the input.
std::vector<VoterFlow> load_trace(const std::filesystem::path& path, TraceFormat format);
std::vector<VoterFlow> parse_trace_csv(std::string_view content);
std::vector<VoterFlow> parse_trace_jsonl(std::string_view content);

std::string write_trace_csv(std::span<const VoterFlow> flows);

// Groups loose records into flows: first-appearance voter order, stable ts sort.
std::vector<VoterFlow> group_records(std::vector<TraceRecord> records);

// Keeps outgoing records with a non-empty payload. Flows that end up empty are
// kept (and reported by empty_flow_ids) so voter populations stay aligned.
std::vector<VoterFlow> filter_analysis_population(std::span<const VoterFlow> flows);
std::vector<std::string> empty_flow_ids(std::span<const VoterFlow> flows);

}  // namespace votetrace
