#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "castkit/cluster.hpp"
#include "castkit/errors.hpp"
#include "castkit/synth.hpp"
#include "support.hpp"

using namespace castkit;

namespace {

SynthSpec clean_spec() {
  SynthSpec spec;
  spec.n_identities = 100;
  spec.outlier_fraction = 0.0;
  spec.label_flip_fraction = 0.0;
  spec.duplicate_identity_fraction = 0.0;
  spec.exact_duplicate_fraction = 0.0;
  spec.planted_test_identities = 0;
  return spec;
}

}  // namespace

TEST(Synth, SameSeedSameCorpus) {
  SynthSpec spec;
  spec.n_identities = 150;
  auto a = generate(spec), b = generate(spec);
  EXPECT_TRUE(a.corpus.equivalent(b.corpus));
  ASSERT_EQ(a.truth.faces.size(), b.truth.faces.size());
  for (std::size_t i = 0; i < a.truth.faces.size(); ++i)
    EXPECT_EQ(a.truth.faces[i].label, b.truth.faces[i].label);
  spec.seed += 1;
  EXPECT_FALSE(generate(spec).corpus.equivalent(a.corpus));
}

TEST(Synth, NullNoiseIsAllClean) {
  auto synth = generate(clean_spec());
  for (const auto& f : synth.truth.faces) EXPECT_EQ(f.label, FaceClass::kClean);
  EXPECT_TRUE(synth.truth.split_pairs.empty());
  EXPECT_TRUE(synth.truth.test_identities.empty());
  EXPECT_EQ(synth.corpus.identity_count(), 100u);
}

TEST(Synth, EmbeddingsAreUnitNorm) {
  auto synth = generate(SynthSpec{});
  for (const auto& f : synth.corpus.faces()) {
    double n = 0.0;
    for (float x : synth.corpus.embedding(f.face_id)) n += double(x) * x;
    ASSERT_NEAR(std::sqrt(n), 1.0, kUnitNormTolerance);
  }
}

TEST(Synth, FolderSizesWithinRange) {
  auto spec = clean_spec();
  spec.faces_per_identity_range = {5, 9};
  auto synth = generate(spec);
  for (const auto& folder : synth.corpus.folders()) {
    EXPECT_GE(folder.members.size(), 5u);
    EXPECT_LE(folder.members.size(), 9u);
  }
}

TEST(Synth, CorruptionProportionsRoughlyMatch) {
  auto synth = generate(SynthSpec{});
  std::array<std::size_t, kFaceClassCount> counts{};
  for (const auto& f : synth.truth.faces) ++counts[static_cast<std::size_t>(f.label)];
  const double total = static_cast<double>(synth.truth.faces.size());
  EXPECT_NEAR(counts[static_cast<std::size_t>(FaceClass::kOutlier)] / total, 0.2, 0.03);
  EXPECT_NEAR(counts[static_cast<std::size_t>(FaceClass::kFlipped)] / total, 0.05, 0.015);
  EXPECT_EQ(synth.truth.split_pairs.size(), 50u);
  EXPECT_EQ(synth.truth.test_identities.size(), 10u);
  EXPECT_EQ(synth.truth.exclusion.size(), 10u);
}

TEST(Synth, PrototypesRespectSeparation) {
  auto spec = clean_spec();
  spec.intra_spread = 0.0;  // members equal their prototype
  spec.masked_fraction = 0.0;
  auto synth = generate(spec);
  const double max_cos = std::cos(spec.min_separation_degrees * 3.14159265358979 / 180.0);
  const auto& folders = synth.corpus.folders();
  for (std::size_t i = 0; i < folders.size(); ++i)
    for (std::size_t j = i + 1; j < folders.size(); ++j)
      EXPECT_LE(cosine_similarity(synth.corpus.embedding(folders[i].members[0]),
                                  synth.corpus.embedding(folders[j].members[0])),
                max_cos + 1e-5);
}

TEST(Synth, LargerSpreadLowersWithinFolderSimilarity) {
  double previous = 2.0;
  for (double spread : {0.2, 0.6, 1.2}) {
    auto spec = clean_spec();
    spec.intra_spread = spread;
    auto synth = generate(spec);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& folder : synth.corpus.folders())
      for (std::size_t i = 1; i < folder.members.size(); ++i, ++n)
        sum += cosine_similarity(synth.corpus.embedding(folder.members[0]),
                                 synth.corpus.embedding(folder.members[i]));
    const double mean = sum / static_cast<double>(n);
    EXPECT_LT(mean, previous) << "spread " << spread;
    previous = mean;
  }
}

TEST(Synth, InfeasibleSeparationFails) {
  SynthSpec spec;
  spec.dim = 2;
  spec.n_identities = 50;
  EXPECT_THROW(generate(spec), GenerationError);
  spec = SynthSpec{};
  spec.outlier_fraction = 1.5;
  EXPECT_THROW(spec.validate(), GenerationError);
}

TEST(ScoreCleaning, PerfectCleaning) {
  auto synth = generate(SynthSpec{});
  std::vector<IdentityFolder> keep;
  for (const auto& folder : synth.corpus.folders()) {
    IdentityFolder f{folder.identity_id, {}, std::nullopt};
    for (FaceId id : folder.members)
      if (is_valid_face(synth.truth.find(id)->label)) f.members.push_back(id);
    if (!f.members.empty()) keep.push_back(f);
  }
  auto score = score_cleaning(synth.corpus.regroup(keep), synth.truth);
  EXPECT_DOUBLE_EQ(score.precision, 1.0);
  EXPECT_DOUBLE_EQ(score.recall, 1.0);
  EXPECT_EQ(score.noise_retained(), 0u);
}

TEST(ScoreCleaning, NoCleaningPrecisionEqualsValidFraction) {
  auto spec = clean_spec();
  spec.outlier_fraction = 0.2;
  auto synth = generate(spec);
  std::size_t valid = 0;
  for (const auto& f : synth.truth.faces) valid += is_valid_face(f.label);
  auto score = score_cleaning(synth.corpus, synth.truth);
  EXPECT_DOUBLE_EQ(score.precision,
                   static_cast<double>(valid) / static_cast<double>(synth.truth.faces.size()));
  EXPECT_NEAR(score.precision, 0.8, 0.02);
  EXPECT_DOUBLE_EQ(score.recall, 1.0);
  EXPECT_EQ(score.test_identities_removed, 0u);
}

TEST(ScoreCleaning, IntraCleaningScoredByDirectLabelComparison) {
  auto spec = clean_spec();
  spec.n_identities = 1000;
  spec.outlier_fraction = 0.2;
  auto synth = generate(spec);
  const auto cleaned = intra_class_clean(synth.corpus, {0.5, 3}, 4).first;
  const auto score = score_cleaning(cleaned, synth.truth);
  std::size_t retained_valid = 0, valid = 0;
  for (const auto& f : synth.truth.faces) {
    valid += is_valid_face(f.label);
    retained_valid += is_valid_face(f.label) && cleaned.find_face(f.face_id);
  }
  EXPECT_DOUBLE_EQ(score.precision, static_cast<double>(retained_valid) /
                                        static_cast<double>(cleaned.face_count()));
  EXPECT_DOUBLE_EQ(score.recall,
                   static_cast<double>(retained_valid) / static_cast<double>(valid));
  EXPECT_GT(score.precision, 0.9);
}

TEST(ScoreCleaning, UnknownFaceIsConsistencyError) {
  auto synth = generate(clean_spec());
  auto stranger = test::make_corpus({{999999, 1, std::vector<float>(64, 1.0f)}});
  EXPECT_THROW(score_cleaning(stranger, synth.truth), ConsistencyError);
}

TEST(SynthSpecParse, ReadsKeys) {
  auto spec = parse_synth_spec("n_identities = 20\nfaces_min = 4\nfaces_max = 6\n# c\nseed=9\n");
  EXPECT_EQ(spec.n_identities, 20u);
  EXPECT_EQ(spec.faces_per_identity_range, (std::pair<std::size_t, std::size_t>{4, 6}));
  EXPECT_EQ(spec.seed, 9u);
  EXPECT_THROW(parse_synth_spec("bogus = 1\n"), ConfigError);
}
