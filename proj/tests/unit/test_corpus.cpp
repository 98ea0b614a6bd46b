#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <iterator>

#include "castkit/errors.hpp"
#include "castkit/synth.hpp"
#include "support.hpp"

using namespace castkit;
using test::Face;

namespace {

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST(Cosine, IdenticalVectorsGiveOne) {
  Rng rng(1);
  auto v = test::random_unit(rng, 512);
  EXPECT_NEAR(cosine_similarity(v, v), 1.0f, 1e-6);
}

TEST(Cosine, OrthogonalVectorsGiveZero) {
  EXPECT_EQ(cosine_similarity(test::axis(8, 0), test::axis(8, 5)), 0.0f);
}

TEST(Cosine, MatchesScalarLoopOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    auto a = test::random_unit(rng, 512);
    auto b = test::random_unit(rng, 512);
    double want = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) want += double(a[i]) * b[i];
    EXPECT_NEAR(cosine_similarity(a, b), want, 1e-6);
  }
}

TEST(Cosine, SymmetricAndClamped) {
  Rng rng(3);
  auto a = test::random_unit(rng, 100);
  auto b = test::random_unit(rng, 100);
  EXPECT_EQ(cosine_similarity(a, b), cosine_similarity(b, a));
  std::vector<float> big(4, 1.0f);  // not unit: dot would be 4
  EXPECT_LE(cosine_similarity(big, big), 1.0f);
}

TEST(Cosine, DimensionMismatchThrows) {
  EXPECT_THROW(cosine_similarity(test::axis(4, 0), test::axis(5, 0)), DimensionError);
}

TEST(EmbeddingStore, NormalisesRowsAndRejectsZero) {
  auto store = EmbeddingStore::from_rows(2, {3.0f, 4.0f, 0.0f, 2.0f});
  EXPECT_FLOAT_EQ(store.row(0)[0], 0.6f);
  EXPECT_FLOAT_EQ(store.row(0)[1], 0.8f);
  EXPECT_FLOAT_EQ(store.row(1)[1], 1.0f);
  EXPECT_THROW(EmbeddingStore::from_rows(2, {1.0f, 0.0f, 0.0f, 0.0f}), IngestError);
  EXPECT_THROW(EmbeddingStore::from_rows(2, {NAN, 1.0f}), IngestError);
}

TEST(Corpus, GroupsFacesIntoFolders) {
  auto corpus = test::make_corpus({{3, 7, test::axis(4, 0)},
                                   {1, 7, test::axis(4, 1)},
                                   {2, 9, test::axis(4, 2)}});
  ASSERT_EQ(corpus.identity_count(), 2u);
  EXPECT_EQ(corpus.folders()[0].identity_id, IdentityId{7});
  EXPECT_EQ(corpus.folders()[0].members, (std::vector<FaceId>{FaceId{1}, FaceId{3}}));
  EXPECT_EQ(corpus.face(FaceId{2}).identity_id, IdentityId{9});
  EXPECT_EQ(corpus.find_face(FaceId{4}), nullptr);
  EXPECT_THROW(corpus.face(FaceId{4}), ConsistencyError);
}

TEST(Corpus, DuplicateFaceIdRejected) {
  EXPECT_THROW(test::make_corpus({{1, 1, test::axis(4, 0)}, {1, 2, test::axis(4, 1)}}),
               ConsistencyError);
}

TEST(Corpus, RegroupRewritesIdentity) {
  auto corpus = test::make_corpus({{1, 1, test::axis(4, 0)}, {2, 2, test::axis(4, 1)}});
  IdentityFolder merged{IdentityId{1}, {FaceId{1}, FaceId{2}}, std::nullopt};
  auto out = corpus.regroup({merged});
  ASSERT_EQ(out.identity_count(), 1u);
  EXPECT_EQ(out.face(FaceId{2}).identity_id, IdentityId{1});
  EXPECT_EQ(out.embedding(FaceId{2})[1], 1.0f);
}

TEST(CorpusIo, LoadsMinimalCorpus) {
  test::TempDir dir("minimal");
  Rng rng(4);
  std::vector<float> rows;
  for (int i = 0; i < 3; ++i) {
    auto v = test::random_unit(rng, 512);
    rows.insert(rows.end(), v.begin(), v.end());
  }
  write_embeddings(dir.path / "e.emb", EmbeddingStore::from_rows(512, rows));
  Manifest m;
  m.dim = 512;
  for (std::uint64_t i = 0; i < 3; ++i) m.faces.push_back({FaceId{i + 1}, IdentityId{5}, i, {}});
  write_manifest(dir.path / "m.tsv", m);
  const Corpus c = load_corpus(dir.path / "m.tsv", dir.path / "e.emb");
  EXPECT_EQ(c.identity_count(), 1u);
  EXPECT_EQ(c.face_count(), 3u);
}

TEST(CorpusIo, DimensionMismatchIsConsistencyError) {
  test::TempDir dir("dim");
  Rng rng(5);
  auto v = test::random_unit(rng, 512);
  write_embeddings(dir.path / "e.emb", EmbeddingStore::from_rows(512, v));
  Manifest m;
  m.dim = 256;
  m.faces.push_back({FaceId{1}, IdentityId{1}, 0, {}});
  write_manifest(dir.path / "m.tsv", m);
  EXPECT_THROW(load_corpus(dir.path / "m.tsv", dir.path / "e.emb"), ConsistencyError);
}

TEST(CorpusIo, ZeroRowIsIngestError) {
  test::TempDir dir("zero");
  std::string bytes(kEmbeddingMagic, 4);
  const std::uint32_t dim = 4;
  const std::uint64_t rows = 1;
  bytes.append(reinterpret_cast<const char*>(&dim), 4);
  bytes.append(reinterpret_cast<const char*>(&rows), 8);
  bytes.append(16, '\0');
  write_bytes(dir.path / "e.emb", bytes);
  EXPECT_THROW(read_embeddings(dir.path / "e.emb"), IngestError);
}

TEST(CorpusIo, MalformedHeaderIsFormatError) {
  test::TempDir dir("header");
  write_bytes(dir.path / "bad.emb", "NOPE0000");
  EXPECT_THROW(read_embeddings(dir.path / "bad.emb"), FormatError);
  std::ofstream(dir.path / "bad.tsv") << "face_id\tidentity\n";
  EXPECT_THROW(read_manifest(dir.path / "bad.tsv"), FormatError);
}

TEST(CorpusIo, TruncatedRowsAreConsistencyError) {
  test::TempDir dir("trunc");
  write_embeddings(dir.path / "e.emb", EmbeddingStore::from_rows(4, {1, 0, 0, 0, 0, 1, 0, 0}));
  std::string bytes = read_bytes(dir.path / "e.emb");
  write_bytes(dir.path / "e.emb", bytes.substr(0, bytes.size() - 4));
  EXPECT_THROW(read_embeddings(dir.path / "e.emb"), ConsistencyError);
}

TEST(CorpusIo, MissingFileErrorNamesPath) {
  try {
    read_embeddings("/nonexistent/dir/x.emb");
    FAIL() << "expected an error";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/x.emb"), std::string::npos);
  }
}

TEST(CorpusIo, RoundTripPreservesCorpus) {
  test::TempDir dir("roundtrip");
  Face f{4, 2, test::axis(6, 3)};
  f.attributes.age_years = 41;
  f.attributes.race = Race::kAfrican;
  f.attributes.gender = Gender::kFemale;
  f.attributes.scenario = Scenario::kWild;
  f.attributes.masked = true;
  auto corpus = test::make_corpus({f, {1, 2, test::axis(6, 0)}, {9, 3, test::axis(6, 5)}});
  write_corpus(corpus, dir.path / "m.tsv", dir.path / "e.emb");
  auto loaded = load_corpus(dir.path / "m.tsv", dir.path / "e.emb");
  EXPECT_TRUE(loaded.equivalent(corpus));
  EXPECT_EQ(loaded.face(FaceId{4}).attributes, f.attributes);
}

TEST(CorpusIo, EmptyCorpusWritesZeroRows) {
  test::TempDir dir("empty");
  write_corpus(Corpus{}, dir.path / "m.tsv", dir.path / "e.emb");
  const auto store = read_embeddings(dir.path / "e.emb");
  EXPECT_EQ(store.row_count(), 0u);
  EXPECT_EQ(read_bytes(dir.path / "e.emb").size(), 16u);
  EXPECT_EQ(load_corpus(dir.path / "m.tsv", dir.path / "e.emb").face_count(), 0u);
}

TEST(CorpusIo, ThousandFaceRoundTripIsByteIdentical) {
  test::TempDir dir("bytes");
  SynthSpec spec;
  spec.n_identities = 50;
  spec.faces_per_identity_range = {20, 20};
  spec.duplicate_identity_fraction = 0.0;
  spec.exact_duplicate_fraction = 0.0;
  spec.planted_test_identities = 0;
  const Corpus corpus = generate(spec).corpus;
  ASSERT_EQ(corpus.face_count(), 1000u);
  write_corpus(corpus, dir.path / "a.tsv", dir.path / "a.emb");
  const Corpus loaded = load_corpus(dir.path / "a.tsv", dir.path / "a.emb");
  write_corpus(loaded, dir.path / "b.tsv", dir.path / "b.emb");
  const std::string a = read_bytes(dir.path / "a.emb"), b = read_bytes(dir.path / "b.emb");
  ASSERT_EQ(a.size(), 16u + 1000u * spec.dim * 4u);
  EXPECT_EQ(a.substr(16), b.substr(16));
  // The embedding region holds each face's stored row, in face_id order.
  std::string expected;
  for (const auto& f : corpus.faces()) {
    auto row = corpus.embedding(f.face_id);
    expected.append(reinterpret_cast<const char*>(row.data()), row.size() * 4);
  }
  EXPECT_EQ(a.substr(16), expected);
  EXPECT_EQ(read_bytes(dir.path / "a.tsv"), read_bytes(dir.path / "b.tsv"));
}
