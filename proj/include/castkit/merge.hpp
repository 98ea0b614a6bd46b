#pragma once

// Inter-class cleaning: compare folder feature centres, merge folders that
// are the same person and delete the smaller of ambiguous pairs.

#include <filesystem>
#include <string_view>
#include <utility>
#include <vector>

#include "castkit/corpus.hpp"
#include "castkit/stats.hpp"

namespace castkit {

struct CenterIndex {
  std::size_t dim = 0;
  std::vector<IdentityId> identity_ids;  // ascending
  std::vector<float> centers;            // row-major, one unit row per id

  std::size_t size() const { return identity_ids.size(); }
  const float* row(std::size_t i) const { return centers.data() + i * dim; }
};

struct CenterComputation {
  CenterIndex index;
  std::vector<IdentityId> degenerate;  // folders whose mean had zero norm
};

// Renormalised mean of member embeddings, summed in ascending face_id order
// in double precision.
CenterComputation compute_centers(const Corpus& corpus, std::size_t workers = 1);

// Centre of a single folder. Throws DegenerateCenterError on a zero mean.
std::vector<float> folder_center(const IdentityFolder& folder,
                                 const Corpus& corpus);

// Builds an index directly from stored rows: one centre per face record, the
// face's identity_id naming the centre (exclusion-set layout).
CenterIndex center_index_from_corpus(const Corpus& corpus);

struct ThresholdEdge {
  IdentityId id_a;  // id_a < id_b
  IdentityId id_b;
  float similarity = 0.0f;

  friend bool operator==(const ThresholdEdge&, const ThresholdEdge&) = default;
};

struct InterClassThresholds {
  double merge_above = 0.7;   // merge iff s > merge_above
  double delete_above = 0.5;  // delete iff delete_above < s <= merge_above
};

struct MergePlan {
  std::vector<ThresholdEdge> merge_edges;
  std::vector<ThresholdEdge> delete_edges;

  bool empty() const { return merge_edges.empty() && delete_edges.empty(); }
};

// Exact blocked all-pairs comparison. Edge lists are ordered by descending
// similarity, ties by (id_a, id_b) ascending.
MergePlan plan_inter_class(const CenterIndex& index,
                           const InterClassThresholds& thresholds = {},
                           std::size_t workers = 1);

// Union-find over merge edges (component keeps its lowest identity_id), then
// delete edges in plan order between surviving representatives: the one with
// fewer faces goes, ties delete the higher identity_id.
std::pair<Corpus, StageStats> apply_inter_class(const Corpus& corpus,
                                                const MergePlan& plan);

// Audit file: "kind<TAB>id_a<TAB>id_b<TAB>similarity" per edge.
void write_merge_plan(const std::filesystem::path& path, const MergePlan& plan);

// For each row of `queries`, the maximum similarity to any row of `targets`
// (-inf when targets is empty).
std::vector<float> max_similarity(const CenterIndex& queries,
                                  const CenterIndex& targets,
                                  std::size_t workers = 1);

}  // namespace castkit
