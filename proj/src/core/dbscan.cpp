#include "dbscan.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

namespace votetrace {

std::vector<int> dbscan(std::size_t n_points, std::size_t min_pts, const RegionQuery& region) {
  constexpr int kUnvisited = -2;
  std::vector<int> labels(n_points, kUnvisited);
  int next_cluster = 0;
  for (std::size_t p = 0; p < n_points; ++p) {
    if (labels[p] != kUnvisited) continue;
    auto neighbors = region(p);
    if (neighbors.size() < min_pts) {
      labels[p] = kNoise;
      continue;
    }
    const int cluster = next_cluster++;
    labels[p] = cluster;
    std::deque<std::size_t> frontier(neighbors.begin(), neighbors.end());
    while (!frontier.empty()) {
      const std::size_t q = frontier.front();
      frontier.pop_front();
      if (labels[q] == kNoise) labels[q] = cluster;  // border point
      if (labels[q] != kUnvisited) continue;
      labels[q] = cluster;
      auto qn = region(q);
      if (qn.size() >= min_pts) frontier.insert(frontier.end(), qn.begin(), qn.end());
    }
  }
  return labels;
}

std::vector<int> dbscan_sorted_1d(std::span<const double> sorted, double eps, std::size_t min_pts) {
  return dbscan(sorted.size(), min_pts, [&](std::size_t i) {
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), sorted[i] - eps);
    auto hi = std::upper_bound(sorted.begin(), sorted.end(), sorted[i] + eps);
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(hi - lo));
    for (auto it = lo; it != hi; ++it) out.push_back(static_cast<std::size_t>(it - sorted.begin()));
    return out;
  });
}

double euclidean(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

std::vector<int> dbscan_euclidean(std::span<const Point3> points, double eps, std::size_t min_pts) {
  return dbscan(points.size(), min_pts, [&](std::size_t i) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (euclidean(points[i], points[j]) <= eps) out.push_back(j);
    }
    return out;
  });
}

std::optional<double> silhouette(std::span<const int> labels,
                                 const std::function<double(std::size_t, std::size_t)>& distance) {
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kNoise) members[labels[i]].push_back(i);
  }
  if (members.size() < 2) return std::nullopt;

  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& [cluster, idx] : members) {
    for (std::size_t i : idx) {
      ++counted;
      if (idx.size() == 1) continue;
      double a = 0.0;
      for (std::size_t j : idx) {
        if (j != i) a += distance(i, j);
      }
      a /= static_cast<double>(idx.size() - 1);
      double b = std::numeric_limits<double>::infinity();
      for (const auto& [other, oidx] : members) {
        if (other == cluster) continue;
        double d = 0.0;
        for (std::size_t j : oidx) d += distance(i, j);
        b = std::min(b, d / static_cast<double>(oidx.size()));
      }
      const double denom = std::max(a, b);
      total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
  }
  return total / static_cast<double>(counted);
}

std::vector<double> k_distances(std::span<const Point3> points, std::size_t k) {
  std::vector<double> out;
  if (points.size() < 2 || k == 0) return out;
  const std::size_t kk = std::min(k, points.size() - 1);
  out.reserve(points.size());
  std::vector<double> d;
  for (std::size_t i = 0; i < points.size(); ++i) {
    d.clear();
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j != i) d.push_back(euclidean(points[i], points[j]));
    }
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk - 1), d.end());
    out.push_back(d[kk - 1]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double knee_value(std::span<const double> curve) {
  if (curve.empty()) return 0.0;
  if (curve.size() < 3) return curve.back();
  const double y0 = curve.front();
  const double y1 = curve.back();
  const double span = y1 - y0;
  if (span <= 0.0) return y1;
  const double n = static_cast<double>(curve.size() - 1);
  std::size_t best = curve.size() - 1;
  double best_gap = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double x = static_cast<double>(i) / n;
    const double y = (curve[i] - y0) / span;
    const double gap = x - y;
    if (gap > best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  return curve[best];
}

}  // namespace votetrace
