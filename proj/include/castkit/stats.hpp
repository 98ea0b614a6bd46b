#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "castkit/corpus.hpp"

namespace castkit {

inline constexpr std::size_t kHistogramBins = 100;

// Fixed 100-bin histogram over [-1, 1]; bin b covers [-1 + b/50, -1 + (b+1)/50).
// A similarity of exactly 1.0 lands in the last bin.
struct SimilarityHistogram {
  std::array<std::uint64_t, kHistogramBins> counts{};

  static std::size_t bin_of(double similarity);
  static double bin_lower(std::size_t bin);

  void add(double similarity) { ++counts[bin_of(similarity)]; }
  std::uint64_t total() const;

  friend bool operator==(const SimilarityHistogram&,
                         const SimilarityHistogram&) = default;
};

// Sum over bins of min(p_a, p_b) on the normalised histograms. 0 when either
// histogram is empty.
double overlap_integral(const SimilarityHistogram& a,
                        const SimilarityHistogram& b);

struct SimilarityDistributions {
  SimilarityHistogram intra;  // within-folder face pairs
  SimilarityHistogram inter;  // folder centre pairs
};

struct StageStats {
  std::string stage_name;
  std::size_t identities_before = 0;
  std::size_t identities_after = 0;
  std::size_t faces_before = 0;
  std::size_t faces_after = 0;
  SimilarityHistogram intra_similarity_histogram;
  SimilarityHistogram inter_similarity_histogram;
};

StageStats make_stage_stats(std::string name, const Corpus& before,
                            const Corpus& after);

// Histograms over `sample_folders` folders drawn with a seeded shuffle (all
// folders when the count covers the corpus). Folders whose centre is
// degenerate contribute intra pairs but no centre.
SimilarityDistributions similarity_distributions(const Corpus& corpus,
                                                 std::size_t sample_folders,
                                                 std::uint64_t seed,
                                                 std::size_t workers = 1);

}  // namespace castkit
