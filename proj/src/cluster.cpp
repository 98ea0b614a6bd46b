#include "castkit/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "castkit/errors.hpp"
#include "castkit/parallel.hpp"
#include "castkit/simd.hpp"

namespace castkit {

void DbscanParams::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 2.0))
    throw ConfigError("DBSCAN epsilon must lie in [0, 2], got " +
                      std::to_string(epsilon));
  if (min_pts < 1) throw ConfigError("DBSCAN min_pts must be at least 1");
}

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

ClusterLabeling dbscan_folder(const IdentityFolder& folder, const Corpus& corpus,
                              const DbscanParams& params) {
  params.validate();
  const std::size_t m = folder.members.size();
  ClusterLabeling out;
  out.labels.assign(m, ClusterLabeling::kNoise);
  if (m == 0) return out;

  std::vector<const float*> rows(m);
  for (std::size_t i = 0; i < m; ++i)
    rows[i] = corpus.embedding_ptr(folder.members[i]);
  std::vector<float> sims(m * m);
  simd::similarity_block(rows, rows, corpus.dim(), sims.data(), m);

  // members are sorted by face_id, so index order is face_id order.
  std::vector<std::vector<std::size_t>> neighbours(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j || within_radius(sims[i * m + j], params.epsilon))
        neighbours[i].push_back(j);
    }
  }
  std::vector<bool> core(m);
  for (std::size_t i = 0; i < m; ++i)
    core[i] = neighbours[i].size() >= params.min_pts;

  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t i = 0; i < m; ++i) {
    if (!core[i]) continue;
    for (std::size_t j : neighbours[i]) {
      if (!core[j]) continue;
      const std::size_t a = find_root(parent, i), b = find_root(parent, j);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }

  // Roots are the lowest index of each component; scanning in index order
  // numbers clusters by their lowest core face_id.
  std::vector<int> cluster_of_root(m, ClusterLabeling::kNoise);
  for (std::size_t i = 0; i < m; ++i) {
    if (!core[i]) continue;
    const std::size_t root = find_root(parent, i);
    if (cluster_of_root[root] == ClusterLabeling::kNoise)
      cluster_of_root[root] = out.cluster_count++;
    out.labels[i] = cluster_of_root[root];
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (core[i]) continue;
    for (std::size_t j : neighbours[i]) {  // ascending, so first core wins
      if (core[j]) {
        out.labels[i] = out.labels[j];
        break;
      }
    }
  }
  return out;
}

namespace {

double mean_centroid_similarity(const std::vector<FaceId>& members,
                                const Corpus& corpus) {
  const std::size_t dim = corpus.dim();
  std::vector<double> sum(dim, 0.0);
  for (FaceId id : members)
    simd::kernels().accumulate(sum.data(), corpus.embedding_ptr(id), dim);
  double norm = 0.0;
  for (double v : sum) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) return -1.0;
  double total = 0.0;
  for (FaceId id : members) {
    const float* row = corpus.embedding_ptr(id);
    double dot = 0.0;
    for (std::size_t k = 0; k < dim; ++k) dot += sum[k] * row[k];
    total += dot / norm;
  }
  return total / static_cast<double>(members.size());
}

}  // namespace

std::optional<IdentityFolder> reserve_largest_cluster(
    const IdentityFolder& folder, const ClusterLabeling& labeling,
    const Corpus& corpus) {
  if (labeling.labels.size() != folder.members.size())
    throw ConsistencyError("cluster labeling does not match folder " +
                           std::to_string(folder.identity_id.value));
  if (labeling.cluster_count == 0) return std::nullopt;

  std::vector<std::vector<FaceId>> clusters(labeling.cluster_count);
  for (std::size_t i = 0; i < folder.members.size(); ++i) {
    if (labeling.labels[i] >= 0)
      clusters[labeling.labels[i]].push_back(folder.members[i]);
  }
  std::size_t largest = 0;
  for (const auto& c : clusters) largest = std::max(largest, c.size());
  if (largest < kMinReservedClusterSize) return std::nullopt;

  std::vector<std::size_t> candidates;
  for (std::size_t c = 0; c < clusters.size(); ++c)
    if (clusters[c].size() == largest) candidates.push_back(c);

  std::size_t best = candidates.front();
  if (candidates.size() > 1) {
    double best_score = mean_centroid_similarity(clusters[best], corpus);
    for (std::size_t k = 1; k < candidates.size(); ++k) {
      const std::size_t c = candidates[k];
      const double score = mean_centroid_similarity(clusters[c], corpus);
      // Members are ascending, so front() is the cluster's minimum face_id.
      if (score > best_score ||
          (score == best_score && clusters[c].front() < clusters[best].front())) {
        best = c;
        best_score = score;
      }
    }
  }
  return IdentityFolder{folder.identity_id, std::move(clusters[best]),
                        std::nullopt};
}

std::pair<Corpus, StageStats> intra_class_clean(const Corpus& corpus,
                                                const DbscanParams& params,
                                                std::size_t workers) {
  params.validate();
  const auto& folders = corpus.folders();
  std::vector<std::optional<IdentityFolder>> kept(folders.size());
  parallel_for(folders.size(), workers, [&](std::size_t i) {
    const auto labeling = dbscan_folder(folders[i], corpus, params);
    kept[i] = reserve_largest_cluster(folders[i], labeling, corpus);
  });
  std::vector<IdentityFolder> survivors;
  for (auto& folder : kept)
    if (folder) survivors.push_back(std::move(*folder));
  Corpus cleaned = corpus.regroup(std::move(survivors));
  StageStats stats = make_stage_stats("intra_class", corpus, cleaned);
  return {std::move(cleaned), std::move(stats)};
}

}  // namespace castkit
