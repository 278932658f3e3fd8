#include "clustermodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "error.hpp"
#include "text.hpp"

namespace votetrace {

namespace {

// Smallest distance between two distinct feature vectors (infinity if all equal).
double min_distinct_distance(std::span<const Point3> features) {
  std::vector<Point3> distinct(features.begin(), features.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < distinct.size(); ++i)
    for (std::size_t j = i + 1; j < distinct.size(); ++j) best = std::min(best, euclidean(distinct[i], distinct[j]));
  return best;
}

constexpr const char* kModule = "clustermodel";

// Relative variance floor below which a feature counts as constant.
constexpr double kZeroVariance = 1e-12;
}  // namespace

const ClusterLabeling::Entry* ClusterLabeling::find(const std::string& voter_id, std::size_t burst_index) const {
  for (const auto& e : entries) {
    if (e.burst_index == burst_index && e.voter_id == voter_id) return &e;
  }
  return nullptr;
}

Point3 raw_features(const ActivityBurst& burst) {
  return {static_cast<double>(burst.payload_total), burst.payload_mean, static_cast<double>(burst.packet_count)};
}

ClusterLabeling cluster_bursts(std::span<const ActivityBurst* const> bursts, const ClusterOptions& options) {
  if (options.min_pts < 1) throw Error(kModule, ErrorKind::usage, "min_pts must be at least 1");
  if (bursts.size() < options.min_pts) {
    throw Error(kModule, ErrorKind::data,
                "need at least min_pts (" + std::to_string(options.min_pts) + ") bursts, got " +
                    std::to_string(bursts.size()));
  }
  ClusterLabeling out;
  out.min_pts = options.min_pts;
  const std::size_t n = bursts.size();

  std::vector<Point3> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = raw_features(*bursts[i]);

  static constexpr const char* kNames[3] = {"payload_total", "payload_mean", "packet_count"};
  for (std::size_t f = 0; f < 3; ++f) {
    double mean = 0.0;
    for (const auto& p : raw) mean += p[f];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& p : raw) var += (p[f] - mean) * (p[f] - mean);
    var /= static_cast<double>(n);
    const double magnitude = std::max(1.0, mean * mean);
    if (var <= kZeroVariance * magnitude) {
      out.scaling.standardized[f] = false;
      out.scaling.mean[f] = 0.0;
      out.scaling.scale[f] = 1.0;
      out.warnings.push_back(std::string("feature '") + kNames[f] + "' has zero variance; left unstandardized");
    } else {
      out.scaling.mean[f] = mean;
      out.scaling.scale[f] = std::sqrt(var);
    }
  }
  out.features.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < 3; ++f) {
      out.features[i][f] = (raw[i][f] - out.scaling.mean[f]) / out.scaling.scale[f];
    }
  }

  if (options.eps) {
    if (!(*options.eps > 0.0)) throw Error(kModule, ErrorKind::usage, "eps must be positive");
    out.eps = *options.eps;
  } else {
    // Knee over the positive k-distances when they cover at least 1% of the
    // bursts, else half the smallest gap between distinct feature vectors.
    auto kd = k_distances(out.features, options.min_pts);
    kd.erase(kd.begin(), std::upper_bound(kd.begin(), kd.end(), 0.0));
    // The knee is an attained distance; the relative nudge keeps equal
    // distances computed from other pairs inside the neighborhood.
    if (kd.size() * 100 >= n) out.eps = knee_value(kd) * (1.0 + 1e-9);
    else out.eps = 0.5 * min_distinct_distance(out.features);
    if (!(out.eps > 0.0) || !std::isfinite(out.eps)) out.eps = 1e-9;
  }

  const auto labels = dbscan_euclidean(out.features, out.eps, options.min_pts);
  int max_label = kNoise;
  out.entries.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.entries[i].voter_id = bursts[i]->voter_id;
    out.entries[i].burst_index = bursts[i]->burst_index;
    out.entries[i].cluster_id = labels[i];
    max_label = std::max(max_label, labels[i]);
  }
  out.cluster_count = static_cast<std::size_t>(max_label + 1);
  return out;
}

ClusterLabeling cluster_bursts(const CorpusSegmentation& seg, const ClusterOptions& options) {
  const auto bursts = all_bursts(seg);
  return cluster_bursts(std::span<const ActivityBurst* const>(bursts), options);
}

SegmentationQuality cluster_quality(const ClusterLabeling& labeling) {
  SegmentationQuality q;
  std::vector<int> labels;
  labels.reserve(labeling.entries.size());
  std::size_t noise = 0;
  for (const auto& e : labeling.entries) {
    labels.push_back(e.cluster_id);
    if (e.cluster_id == kNoise) ++noise;
  }
  q.noise_ratio = labels.empty() ? 0.0 : static_cast<double>(noise) / static_cast<double>(labels.size());
  q.silhouette = silhouette(labels, [&](std::size_t i, std::size_t j) {
    return euclidean(labeling.features[i], labeling.features[j]);
  });
  return q;
}

void anchor_clusters(ClusterLabeling& labeling, std::span<const ActionAssignment> assignments) {
  std::map<std::pair<std::string, std::size_t>, int> assigned;
  for (const auto& a : assignments) assigned[{a.voter_id, a.burst_index}] = a.action_id;

  std::map<int, std::map<int, std::size_t>> votes;
  std::map<int, std::size_t> sizes;
  for (const auto& e : labeling.entries) {
    if (e.cluster_id == kNoise) continue;
    ++sizes[e.cluster_id];
    auto it = assigned.find({e.voter_id, e.burst_index});
    if (it != assigned.end() && it->second != kUnknownAction) ++votes[e.cluster_id][it->second];
  }
  labeling.cluster_actions.clear();
  for (const auto& [cluster, size] : sizes) {
    int action = kUnknownAction;
    std::size_t best = 0;
    for (const auto& [id, count] : votes[cluster]) {
      if (count > best) {  // std::map order: ties keep the lowest id
        best = count;
        action = id;
      }
    }
    const double purity = static_cast<double>(best) / static_cast<double>(size);
    labeling.cluster_actions[cluster] = {action, purity};
  }
  for (auto& e : labeling.entries) {
    auto it = labeling.cluster_actions.find(e.cluster_id);
    if (it == labeling.cluster_actions.end()) {
      e.action_id = kUnknownAction;
      e.purity = 0.0;
    } else {
      e.action_id = it->second.first;
      e.purity = it->second.second;
    }
  }
}

void anchor_clusters(ClusterLabeling& labeling, const CorpusSegmentation& seg, const ActionCatalog& catalog) {
  std::vector<ActionAssignment> assignments;
  for (const auto& v : seg.voters) {
    for (const auto& b : v.bursts) assignments.push_back(classify_burst(b, catalog));
  }
  anchor_clusters(labeling, assignments);
}

std::string write_labeling_csv(const ClusterLabeling& labeling) {
  std::string out = "voter_id,burst_index,cluster_id,action_id,purity\n";
  for (const auto& e : labeling.entries) {
    out += text::csv_escape(e.voter_id) + ',' + std::to_string(e.burst_index) + ',' +
           std::to_string(e.cluster_id) + ',' + std::to_string(e.action_id) + ',' +
           text::format_fixed(e.purity, 6) + '\n';
  }
  return out;
}

}  // namespace votetrace
