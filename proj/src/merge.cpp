#include "castkit/merge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "castkit/errors.hpp"
#include "castkit/parallel.hpp"
#include "castkit/simd.hpp"

namespace castkit {
namespace {

constexpr std::size_t kBlock = 64;

bool edge_order(const ThresholdEdge& a, const ThresholdEdge& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  if (a.id_a != b.id_a) return a.id_a < b.id_a;
  return a.id_b < b.id_b;
}

std::optional<std::vector<float>> try_center(const IdentityFolder& folder,
                                             const Corpus& corpus) {
  const std::size_t dim = corpus.dim();
  std::vector<double> sum(dim, 0.0);
  for (FaceId id : folder.members)
    simd::kernels().accumulate(sum.data(), corpus.embedding_ptr(id), dim);
  const double count = static_cast<double>(folder.members.size());
  double norm = 0.0;
  for (double& v : sum) {
    v /= count;
    norm += v * v;
  }
  norm = std::sqrt(norm);
  if (!(norm > 1e-6)) return std::nullopt;
  std::vector<float> center(dim);
  for (std::size_t k = 0; k < dim; ++k)
    center[k] = static_cast<float>(sum[k] / norm);
  return center;
}

}  // namespace

std::vector<float> folder_center(const IdentityFolder& folder,
                                 const Corpus& corpus) {
  auto center = try_center(folder, corpus);
  if (!center)
    throw DegenerateCenterError("folder " +
                                std::to_string(folder.identity_id.value) +
                                " has a zero-norm mean embedding");
  return std::move(*center);
}

CenterComputation compute_centers(const Corpus& corpus, std::size_t workers) {
  const auto& folders = corpus.folders();
  std::vector<std::optional<std::vector<float>>> centers(folders.size());
  parallel_for(folders.size(), workers, [&](std::size_t i) {
    centers[i] = try_center(folders[i], corpus);
  });
  CenterComputation out;
  out.index.dim = corpus.dim();
  for (std::size_t i = 0; i < folders.size(); ++i) {
    if (!centers[i]) {
      out.degenerate.push_back(folders[i].identity_id);
      continue;
    }
    out.index.identity_ids.push_back(folders[i].identity_id);
    out.index.centers.insert(out.index.centers.end(), centers[i]->begin(),
                             centers[i]->end());
  }
  return out;
}

CenterIndex center_index_from_corpus(const Corpus& corpus) {
  CenterIndex index;
  index.dim = corpus.dim();
  std::vector<std::pair<IdentityId, FaceId>> order;
  for (const auto& f : corpus.faces()) order.emplace_back(f.identity_id, f.face_id);
  std::sort(order.begin(), order.end());
  for (const auto& [identity, face] : order) {
    index.identity_ids.push_back(identity);
    const auto row = corpus.embedding(face);
    index.centers.insert(index.centers.end(), row.begin(), row.end());
  }
  return index;
}

MergePlan plan_inter_class(const CenterIndex& index,
                           const InterClassThresholds& thresholds,
                           std::size_t workers) {
  const std::size_t n = index.size();
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<std::vector<ThresholdEdge>> found(blocks);

  parallel_for(blocks, workers, [&](std::size_t bi) {
    const std::size_t i0 = bi * kBlock, i1 = std::min(n, i0 + kBlock);
    std::vector<float> tile(kBlock * kBlock);
    for (std::size_t j0 = i0; j0 < n; j0 += kBlock) {
      const std::size_t j1 = std::min(n, j0 + kBlock);
      simd::similarity_block(index.row(i0), i1 - i0, index.row(j0), j1 - j0,
                             index.dim, tile.data(), kBlock);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = std::max(j0, i + 1); j < j1; ++j) {
          const float s =
              std::clamp(tile[(i - i0) * kBlock + (j - j0)], -1.0f, 1.0f);
          if (static_cast<double>(s) > thresholds.delete_above) {
            IdentityId a = index.identity_ids[i], b = index.identity_ids[j];
            if (b < a) std::swap(a, b);
            found[bi].push_back({a, b, s});
          }
        }
      }
    }
  });

  MergePlan plan;
  for (auto& block : found) {
    for (const auto& e : block) {
      if (static_cast<double>(e.similarity) > thresholds.merge_above)
        plan.merge_edges.push_back(e);
      else
        plan.delete_edges.push_back(e);
    }
  }
  std::sort(plan.merge_edges.begin(), plan.merge_edges.end(), edge_order);
  std::sort(plan.delete_edges.begin(), plan.delete_edges.end(), edge_order);
  return plan;
}

std::pair<Corpus, StageStats> apply_inter_class(const Corpus& corpus,
                                                const MergePlan& plan) {
  const auto& folders = corpus.folders();
  const std::size_t n = folders.size();
  auto slot_of = [&](IdentityId id) {
    auto it = std::lower_bound(
        folders.begin(), folders.end(), id,
        [](const IdentityFolder& f, IdentityId key) { return f.identity_id < key; });
    if (it == folders.end() || it->identity_id != id)
      throw ConsistencyError("merge plan references unknown identity " +
                             std::to_string(id.value));
    return static_cast<std::size_t>(it - folders.begin());
  };

  // Folders are sorted by id, so the lowest slot is the lowest identity_id.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& e : plan.merge_edges) {
    const std::size_t a = root(slot_of(e.id_a)), b = root(slot_of(e.id_b));
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }

  std::vector<std::size_t> size(n, 0);
  for (std::size_t i = 0; i < n; ++i) size[root(i)] += folders[i].members.size();

  std::vector<bool> deleted(n, false);
  for (const auto& e : plan.delete_edges) {
    const std::size_t a = root(slot_of(e.id_a)), b = root(slot_of(e.id_b));
    if (a == b || deleted[a] || deleted[b]) continue;
    std::size_t victim;
    if (size[a] != size[b])
      victim = size[a] < size[b] ? a : b;
    else
      victim = std::max(a, b);
    deleted[victim] = true;
  }

  std::vector<IdentityFolder> merged(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = root(i);
    if (deleted[r]) continue;
    merged[r].identity_id = folders[r].identity_id;
    merged[r].members.insert(merged[r].members.end(), folders[i].members.begin(),
                             folders[i].members.end());
  }
  std::vector<IdentityFolder> survivors;
  for (std::size_t i = 0; i < n; ++i) {
    if (merged[i].members.empty()) continue;
    std::sort(merged[i].members.begin(), merged[i].members.end());
    survivors.push_back(std::move(merged[i]));
  }
  Corpus out = corpus.regroup(std::move(survivors));
  StageStats stats = make_stage_stats("inter_class", corpus, out);
  return {std::move(out), std::move(stats)};
}

void write_merge_plan(const std::filesystem::path& path, const MergePlan& plan) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  char buf[128];
  auto emit = [&](const char* kind, const ThresholdEdge& e) {
    std::snprintf(buf, sizeof buf, "%s\t%llu\t%llu\t%.9g\n", kind,
                  static_cast<unsigned long long>(e.id_a.value),
                  static_cast<unsigned long long>(e.id_b.value),
                  static_cast<double>(e.similarity));
    out << buf;
  };
  for (const auto& e : plan.merge_edges) emit("merge", e);
  for (const auto& e : plan.delete_edges) emit("delete", e);
  if (!out) throw IoError(path.string() + ": write failed");
}

std::vector<float> max_similarity(const CenterIndex& queries,
                                  const CenterIndex& targets,
                                  std::size_t workers) {
  if (queries.size() > 0 && targets.size() > 0 && queries.dim != targets.dim)
    throw DimensionError("centre dimension mismatch (" +
                         std::to_string(queries.dim) + " vs " +
                         std::to_string(targets.dim) + ")");
  const std::size_t n = queries.size(), t = targets.size();
  std::vector<float> best(n, -std::numeric_limits<float>::infinity());
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  parallel_for(blocks, workers, [&](std::size_t bi) {
    const std::size_t i0 = bi * kBlock, i1 = std::min(n, i0 + kBlock);
    std::vector<float> tile(kBlock * kBlock);
    for (std::size_t j0 = 0; j0 < t; j0 += kBlock) {
      const std::size_t j1 = std::min(t, j0 + kBlock);
      simd::similarity_block(queries.row(i0), i1 - i0, targets.row(j0), j1 - j0,
                             queries.dim, tile.data(), kBlock);
      for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = j0; j < j1; ++j)
          best[i] = std::max(best[i], std::clamp(tile[(i - i0) * kBlock + (j - j0)],
                                                 -1.0f, 1.0f));
    }
  });
  return best;
}

}  // namespace castkit
