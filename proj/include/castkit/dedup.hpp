#pragma once

// Final clean-up passes: near-identical faces within a folder, and folders
// that overlap an evaluation (exclusion) identity set.

#include <utility>

#include "castkit/corpus.hpp"
#include "castkit/merge.hpp"
#include "castkit/stats.hpp"

namespace castkit {

inline constexpr double kDefaultDedupThreshold = 0.95;
inline constexpr double kDefaultOverlapThreshold = 0.7;

// Greedy within-folder removal: pairs above the threshold are visited by
// descending similarity and the larger face_id of a surviving pair is dropped.
std::pair<Corpus, StageStats> remove_duplicates(
    const Corpus& corpus, double threshold = kDefaultDedupThreshold,
    std::size_t workers = 1);

// Drops every folder whose (recomputed) centre exceeds the threshold against
// any exclusion centre. Folders with a degenerate centre are kept.
std::pair<Corpus, StageStats> remove_test_overlap(
    const Corpus& corpus, const CenterIndex& exclusion_centers,
    double threshold = kDefaultOverlapThreshold, std::size_t workers = 1);

}  // namespace castkit
