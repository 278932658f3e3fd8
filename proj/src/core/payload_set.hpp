#pragma once

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <span>
#include <vector>

namespace votetrace {

// A set of payload lengths kept as a sorted vector of distinct values. Small
// (a handful of elements per burst), so sorted-vector algebra beats node sets.
using PayloadSet = std::vector<std::int64_t>;

inline PayloadSet make_payload_set(std::vector<std::int64_t> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

inline PayloadSet set_intersection(const PayloadSet& a, const PayloadSet& b) {
  PayloadSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline PayloadSet set_union(const PayloadSet& a, const PayloadSet& b) {
  PayloadSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline PayloadSet set_difference(const PayloadSet& a, const PayloadSet& b) {
  PayloadSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline std::size_t intersection_size(const PayloadSet& a, const PayloadSet& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

inline bool intersects(const PayloadSet& a, const PayloadSet& b) {
  return intersection_size(a, b) > 0;
}

}  // namespace votetrace
