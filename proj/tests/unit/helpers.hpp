#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "segment.hpp"
#include "trace.hpp"

namespace testing {

inline votetrace::TraceRecord rec(const std::string& voter, double ts, std::int64_t len,
                                  votetrace::Direction dir = votetrace::Direction::outgoing) {
  votetrace::TraceRecord r;
  r.voter_id = voter;
  r.ts = ts;
  r.payload_len = len;
  r.direction = dir;
  return r;
}

inline votetrace::VoterFlow flow_at(const std::string& voter, const std::vector<double>& ts,
                                    std::int64_t len = 100) {
  votetrace::VoterFlow f;
  f.voter_id = voter;
  for (double t : ts) f.records.push_back(rec(voter, t, len));
  return f;
}

// Burst with records at the given offsets from `start`, payloads cycling over `lens`.
inline votetrace::ActivityBurst burst(const std::string& voter, std::size_t index, double start,
                                      const std::vector<double>& offsets, const std::vector<std::int64_t>& lens) {
  std::vector<votetrace::TraceRecord> rs;
  for (std::size_t i = 0; i < offsets.size(); ++i) rs.push_back(rec(voter, start + offsets[i], lens[i % lens.size()]));
  return votetrace::make_burst(voter, index, std::move(rs));
}

}  // namespace testing
