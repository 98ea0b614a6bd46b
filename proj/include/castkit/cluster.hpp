#pragma once

// Intra-class cleaning: DBSCAN per identity folder on cosine distance
// d(a, b) = 1 - cos(a, b), keeping only the dominant cluster.

#include <optional>
#include <utility>
#include <vector>

#include "castkit/corpus.hpp"
#include "castkit/stats.hpp"

namespace castkit {

inline constexpr std::size_t kMinReservedClusterSize = 3;

struct DbscanParams {
  double epsilon = 0.5;  // cosine-distance radius, = 1 - similarity threshold
  std::size_t min_pts = 3;

  static DbscanParams from_similarity(double similarity, std::size_t min_pts) {
    return {1.0 - similarity, min_pts};
  }
  void validate() const;
};

// True when two faces at similarity `similarity` are within the radius.
inline bool within_radius(float similarity, double epsilon) {
  return 1.0 - static_cast<double>(similarity) <= epsilon;
}

struct ClusterLabeling {
  static constexpr int kNoise = -1;
  std::vector<int> labels;  // aligned with folder.members
  int cluster_count = 0;
};

// Order-independent DBSCAN: core points have at least min_pts neighbours
// counting themselves; clusters are connected components of core points,
// numbered by their lowest core face_id; a border point joins the cluster of
// its lowest-face_id core neighbour.
ClusterLabeling dbscan_folder(const IdentityFolder& folder, const Corpus& corpus,
                              const DbscanParams& params);

// Largest cluster if it has at least 3 members. Ties go to the cluster with
// higher mean member-to-centroid similarity, then to the lowest face_id.
std::optional<IdentityFolder> reserve_largest_cluster(
    const IdentityFolder& folder, const ClusterLabeling& labeling,
    const Corpus& corpus);

std::pair<Corpus, StageStats> intra_class_clean(const Corpus& corpus,
                                                const DbscanParams& params,
                                                std::size_t workers = 1);

}  // namespace castkit
