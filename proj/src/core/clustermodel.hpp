#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbscan.hpp"
#include "segment.hpp"
#include "setmodel.hpp"

namespace votetrace {

// (payload_total, payload_mean, packet_count), z-scored across the corpus.
struct FeatureScaling {
  std::array<double, 3> mean{};
  std::array<double, 3> scale{1.0, 1.0, 1.0};
  std::array<bool, 3> standardized{true, true, true};
};

struct ClusterOptions {
  std::optional<double> eps;  // unset: knee of the k-distance curve, k = min_pts
  std::size_t min_pts = 5;
};

struct ClusterLabeling {
  struct Entry {
    std::string voter_id;
    std::size_t burst_index = 0;
    int cluster_id = kNoise;
    int action_id = kUnknownAction;  // filled by anchoring or evaluation
    double purity = 0.0;
  };
  std::vector<Entry> entries;  // corpus order (voters, then bursts)
  std::vector<Point3> features;  // standardized, aligned with entries
  FeatureScaling scaling;
  double eps = 0.0;
  std::size_t min_pts = 0;
  std::size_t cluster_count = 0;
  std::vector<std::string> warnings;
  // cluster id -> (action id, purity) once anchored
  std::map<int, std::pair<int, double>> cluster_actions;

  const Entry* find(const std::string& voter_id, std::size_t burst_index) const;
};

Point3 raw_features(const ActivityBurst& burst);

ClusterLabeling cluster_bursts(std::span<const ActivityBurst* const> bursts, const ClusterOptions& options);
ClusterLabeling cluster_bursts(const CorpusSegmentation& seg, const ClusterOptions& options);

SegmentationQuality cluster_quality(const ClusterLabeling& labeling);

// Each cluster takes the action id the set model assigns to the plurality of
// its members; clusters with no classified member keep an anonymous id
// (kUnknownAction). Purity is the plurality share among all members.
void anchor_clusters(ClusterLabeling& labeling, std::span<const ActionAssignment> assignments);
void anchor_clusters(ClusterLabeling& labeling, const CorpusSegmentation& seg, const ActionCatalog& catalog);

std::string write_labeling_csv(const ClusterLabeling& labeling);

}  // namespace votetrace
