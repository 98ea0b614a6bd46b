#include "castkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "castkit/merge.hpp"
#include "castkit/parallel.hpp"
#include "castkit/random.hpp"
#include "castkit/simd.hpp"

namespace castkit {

std::size_t SimilarityHistogram::bin_of(double similarity) {
  const double scaled = std::floor((similarity + 1.0) * (kHistogramBins / 2.0));
  if (!(scaled > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(scaled), kHistogramBins - 1);
}

double SimilarityHistogram::bin_lower(std::size_t bin) {
  return -1.0 + static_cast<double>(bin) * (2.0 / kHistogramBins);
}

std::uint64_t SimilarityHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

double overlap_integral(const SimilarityHistogram& a,
                        const SimilarityHistogram& b) {
  const double ta = static_cast<double>(a.total());
  const double tb = static_cast<double>(b.total());
  if (ta == 0.0 || tb == 0.0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < kHistogramBins; ++i)
    sum += std::min(a.counts[i] / ta, b.counts[i] / tb);
  return sum;
}

StageStats make_stage_stats(std::string name, const Corpus& before,
                            const Corpus& after) {
  StageStats s;
  s.stage_name = std::move(name);
  s.identities_before = before.identity_count();
  s.identities_after = after.identity_count();
  s.faces_before = before.face_count();
  s.faces_after = after.face_count();
  return s;
}

SimilarityDistributions similarity_distributions(const Corpus& corpus,
                                                 std::size_t sample_folders,
                                                 std::uint64_t seed,
                                                 std::size_t workers) {
  const auto& folders = corpus.folders();
  std::vector<std::size_t> picked(folders.size());
  std::iota(picked.begin(), picked.end(), 0);
  if (sample_folders < folders.size()) {
    Rng rng(seed);
    rng.shuffle(picked.begin(), picked.end());
    picked.resize(sample_folders);
    std::sort(picked.begin(), picked.end());
  }

  SimilarityDistributions out;
  std::vector<SimilarityHistogram> local(picked.size());
  parallel_for(picked.size(), workers, [&](std::size_t k) {
    const auto& members = folders[picked[k]].members;
    const std::size_t m = members.size();
    if (m < 2) return;
    std::vector<const float*> rows(m);
    for (std::size_t i = 0; i < m; ++i) rows[i] = corpus.embedding_ptr(members[i]);
    std::vector<float> sims(m * m);
    simd::similarity_block(rows, rows, corpus.dim(), sims.data(), m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j)
        local[k].add(std::clamp(sims[i * m + j], -1.0f, 1.0f));
  });
  for (const auto& h : local)
    for (std::size_t b = 0; b < kHistogramBins; ++b) out.intra.counts[b] += h.counts[b];

  std::vector<IdentityFolder> sampled;
  sampled.reserve(picked.size());
  for (std::size_t idx : picked)
    sampled.push_back(IdentityFolder{folders[idx].identity_id,
                                     folders[idx].members, std::nullopt});
  const CenterIndex centers =
      compute_centers(corpus.regroup(std::move(sampled)), workers).index;
  const std::size_t n = centers.size();
  std::vector<SimilarityHistogram> rows_hist(n);
  parallel_for(n, workers, [&](std::size_t i) {
    if (i + 1 >= n) return;
    std::vector<float> sims(n - i - 1);
    simd::similarity_block(centers.row(i), 1, centers.row(i + 1), n - i - 1,
                           centers.dim, sims.data(), n - i - 1);
    for (float s : sims) rows_hist[i].add(std::clamp(s, -1.0f, 1.0f));
  });
  for (const auto& h : rows_hist)
    for (std::size_t b = 0; b < kHistogramBins; ++b) out.inter.counts[b] += h.counts[b];
  return out;
}

}  // namespace castkit
