#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace votetrace {

inline constexpr int kNoise = -1;

// Returns the indices of all points within eps of point i, i itself included.
using RegionQuery = std::function<std::vector<std::size_t>(std::size_t)>;

// Classic DBSCAN. Points are visited in index order, so for a fixed input the
// labeling is deterministic. Cluster ids are 0..k-1 in discovery order; noise
// is kNoise. A point is core when its neighborhood (itself included) holds at
// least min_pts points.
std::vector<int> dbscan(std::size_t n_points, std::size_t min_pts, const RegionQuery& region);

// 1-D DBSCAN over values sorted ascending; neighborhoods are |dx| <= eps.
std::vector<int> dbscan_sorted_1d(std::span<const double> sorted, double eps, std::size_t min_pts);

using Point3 = std::array<double, 3>;
std::vector<int> dbscan_euclidean(std::span<const Point3> points, double eps, std::size_t min_pts);

double euclidean(const Point3& a, const Point3& b);

// Mean silhouette over non-noise points; nullopt with fewer than two clusters.
// Members of singleton clusters score 0.
std::optional<double> silhouette(std::span<const int> labels,
                                 const std::function<double(std::size_t, std::size_t)>& distance);

// Sorted distances from each point to its k-th nearest other point.
std::vector<double> k_distances(std::span<const Point3> points, std::size_t k);

// Knee of a sorted ascending curve: the point of maximal distance below the
// chord joining its endpoints (normalized axes).
double knee_value(std::span<const double> sorted_curve);

}  // namespace votetrace
