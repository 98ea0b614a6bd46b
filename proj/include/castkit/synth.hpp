#pragma once

// Seeded generator of noisy identity-labelled corpora with per-face ground
// truth, used to score the cleaning pipeline.

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "castkit/corpus.hpp"
#include "castkit/merge.hpp"

namespace castkit {

struct SynthSpec {
  std::size_t n_identities = 1000;
  std::pair<std::size_t, std::size_t> faces_per_identity_range{10, 30};
  std::size_t dim = 64;
  // Norm of the tangent noise added to the identity prototype; member-to-
  // prototype similarity is about 1 / sqrt(1 + spread^2).
  double intra_spread = 0.6;
  double outlier_fraction = 0.2;
  double label_flip_fraction = 0.05;
  double duplicate_identity_fraction = 0.05;
  double exact_duplicate_fraction = 0.02;
  std::size_t planted_test_identities = 10;
  std::uint64_t seed = 42;

  double min_separation_degrees = 60.0;
  // Outliers are look-alikes whose similarity to the folder prototype is
  // uniform in [0, outlier_max_similarity].
  double outlier_max_similarity = 0.7;
  double masked_fraction = 0.1;

  void validate() const;  // throws GenerationError
};

enum class FaceClass {
  kClean,
  kOutlier,
  kFlipped,
  kDuplicateIdentity,
  kExactDuplicate,
  kTestOverlap,
};
inline constexpr std::size_t kFaceClassCount = 6;

std::string_view to_string(FaceClass c);

// Faces that belong in their folder: clean, or a genuine face of an identity
// that was split across two folders.
inline bool is_valid_face(FaceClass c) {
  return c == FaceClass::kClean || c == FaceClass::kDuplicateIdentity;
}

struct FaceTruth {
  FaceId face_id;
  FaceClass label = FaceClass::kClean;
  IdentityId origin;  // folder the face was generated into
};

struct GroundTruth {
  std::vector<FaceTruth> faces;  // ascending face_id
  std::vector<std::pair<IdentityId, IdentityId>> split_pairs;
  std::vector<IdentityId> test_identities;
  CenterIndex exclusion;  // prototypes of the test identities

  const FaceTruth* find(FaceId id) const;
};

struct SynthResult {
  Corpus corpus;
  GroundTruth truth;
};

SynthResult generate(const SynthSpec& spec);

struct ClassTally {
  std::size_t generated = 0;
  std::size_t retained = 0;
};

struct CleaningScore {
  double precision = 1.0;  // valid retained / retained
  double recall = 1.0;     // valid retained / valid generated
  std::size_t retained = 0;
  std::array<ClassTally, kFaceClassCount> per_class{};
  std::size_t splits_total = 0;
  std::size_t splits_unified = 0;
  double split_unification = 1.0;
  std::size_t test_identities_removed = 0;  // no face of theirs retained

  std::size_t noise_retained() const;  // outlier + flipped + test-overlap
};

// Throws ConsistencyError on a face_id absent from the ground truth.
CleaningScore score_cleaning(const Corpus& result, const GroundTruth& truth);

// Files: face_id<TAB>class per line; split pairs id_a<TAB>id_b per line.
void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth);
void write_split_pairs(const std::filesystem::path& path, const GroundTruth& truth);
// Exclusion set as a corpus: one face per centre, identity_id names it.
Corpus exclusion_corpus(const CenterIndex& centers);

// Builds a SynthSpec from "key = value" text (same syntax as CastConfig).
SynthSpec parse_synth_spec(const std::string& text);

}  // namespace castkit
