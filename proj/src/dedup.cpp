#include "castkit/dedup.hpp"

#include <algorithm>
#include <string>
#include <tuple>

#include "castkit/errors.hpp"
#include "castkit/parallel.hpp"
#include "castkit/simd.hpp"

namespace castkit {

std::pair<Corpus, StageStats> remove_duplicates(const Corpus& corpus,
                                                double threshold,
                                                std::size_t workers) {
  const auto& folders = corpus.folders();
  std::vector<IdentityFolder> kept(folders.size());
  parallel_for(folders.size(), workers, [&](std::size_t f) {
    const auto& members = folders[f].members;
    const std::size_t m = members.size();
    std::vector<const float*> rows(m);
    for (std::size_t i = 0; i < m; ++i) rows[i] = corpus.embedding_ptr(members[i]);
    std::vector<float> sims(m * m);
    simd::similarity_block(rows, rows, corpus.dim(), sims.data(), m);

    std::vector<std::tuple<float, std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        const float s = std::clamp(sims[i * m + j], -1.0f, 1.0f);
        if (static_cast<double>(s) > threshold) pairs.emplace_back(s, i, j);
      }
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
      if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
      return std::tie(std::get<1>(a), std::get<2>(a)) <
             std::tie(std::get<1>(b), std::get<2>(b));
    });
    std::vector<bool> removed(m, false);
    for (const auto& [s, i, j] : pairs) {
      if (removed[i] || removed[j]) continue;
      removed[j] = true;  // j > i, so j holds the larger face_id
    }
    kept[f].identity_id = folders[f].identity_id;
    for (std::size_t i = 0; i < m; ++i)
      if (!removed[i]) kept[f].members.push_back(members[i]);
  });
  Corpus out = corpus.regroup(std::move(kept));
  StageStats stats = make_stage_stats("remove_duplicates", corpus, out);
  return {std::move(out), std::move(stats)};
}

std::pair<Corpus, StageStats> remove_test_overlap(
    const Corpus& corpus, const CenterIndex& exclusion_centers,
    double threshold, std::size_t workers) {
  if (exclusion_centers.size() > 0 && corpus.identity_count() > 0 &&
      exclusion_centers.dim != corpus.dim())
    throw DimensionError("exclusion set dim " +
                         std::to_string(exclusion_centers.dim) +
                         " does not match corpus dim " +
                         std::to_string(corpus.dim()));
  const CenterComputation centers = compute_centers(corpus, workers);
  const std::vector<float> best =
      max_similarity(centers.index, exclusion_centers, workers);

  std::vector<IdentityId> overlapping;
  for (std::size_t i = 0; i < best.size(); ++i)
    if (static_cast<double>(best[i]) > threshold)
      overlapping.push_back(centers.index.identity_ids[i]);

  std::vector<IdentityFolder> kept;
  for (const auto& folder : corpus.folders()) {
    if (std::binary_search(overlapping.begin(), overlapping.end(),
                           folder.identity_id))
      continue;
    kept.push_back(IdentityFolder{folder.identity_id, folder.members, std::nullopt});
  }
  Corpus out = corpus.regroup(std::move(kept));
  StageStats stats = make_stage_stats("remove_test_overlap", corpus, out);
  return {std::move(out), std::move(stats)};
}

}  // namespace castkit
