#pragma once

// Identity-labelled face corpus: attribute-tagged face records grouped into
// identity folders, backed by a dense store of unit-norm f32 embeddings.
//
// On-disk layout
//   embeddings: 16-byte header {"EMB1", u32 dim, u64 row_count}, then
//               row-major little-endian f32 rows.
//   manifest:   UTF-8 TSV with LF endings. First line "#MANIFEST1<TAB><dim>",
//               then one face per line:
//               face_id identity_id embedding_index age race gender scenario masked
//               Empty field means the attribute is absent; masked is 0 or 1.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "castkit/ids.hpp"

namespace castkit {

inline constexpr std::size_t kDefaultEmbeddingDim = 512;
inline constexpr double kUnitNormTolerance = 1e-4;

enum class Race { kCaucasian, kEastAsian, kAfrican, kOther };
enum class Gender { kMale, kFemale };
enum class Scenario { kControlled, kWild };

std::string_view to_string(Race race);
std::string_view to_string(Gender gender);
std::string_view to_string(Scenario scenario);
std::optional<Race> parse_race(std::string_view text);
std::optional<Gender> parse_gender(std::string_view text);
std::optional<Scenario> parse_scenario(std::string_view text);

struct AttributeSet {
  std::optional<std::uint32_t> age_years;
  std::optional<Race> race;
  std::optional<Gender> gender;
  std::optional<Scenario> scenario;
  bool masked = false;

  friend bool operator==(const AttributeSet&, const AttributeSet&) = default;
};

struct FaceRecord {
  FaceId face_id;
  IdentityId identity_id;
  std::size_t embedding_index = 0;
  AttributeSet attributes;

  friend bool operator==(const FaceRecord&, const FaceRecord&) = default;
};

struct IdentityFolder {
  IdentityId identity_id;
  std::vector<FaceId> members;  // ascending face_id
  std::optional<std::vector<float>> center;
};

// Row-major matrix of unit-norm embeddings.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t dim);

  // Normalises every row (rows already within 1e-6 of unit norm are kept
  // bit-exact). Throws IngestError on a zero or non-finite row.
  static EmbeddingStore from_rows(std::size_t dim, std::vector<float> data);

  std::size_t dim() const { return dim_; }
  std::size_t row_count() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::span<const float> row(std::size_t index) const {
    return {data_.data() + index * dim_, dim_};
  }
  const float* row_ptr(std::size_t index) const {
    return data_.data() + index * dim_;
  }
  std::span<const float> data() const { return data_; }

  // Appends a row after normalising it; returns its index.
  std::size_t append(std::span<const float> values);

 private:
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

// Normalises `values` in place. Returns false if the norm is zero or not
// finite.
bool normalize_in_place(std::span<float> values);

// Clamped dot product of two unit vectors. Symmetric bit-for-bit.
float cosine_similarity(std::span<const float> a, std::span<const float> b);

class Corpus {
 public:
  Corpus() : store_(std::make_shared<const EmbeddingStore>()) {}

  // Validates every invariant; throws ConsistencyError on violation. Faces
  // are grouped into folders by identity_id.
  static Corpus from_faces(std::shared_ptr<const EmbeddingStore> store,
                           std::vector<FaceRecord> faces);

  const EmbeddingStore& store() const { return *store_; }
  const std::shared_ptr<const EmbeddingStore>& store_ptr() const {
    return store_;
  }
  std::size_t dim() const { return store_->dim(); }

  // Sorted by face_id / identity_id.
  const std::vector<FaceRecord>& faces() const { return faces_; }
  const std::vector<IdentityFolder>& folders() const { return folders_; }
  std::size_t face_count() const { return faces_.size(); }
  std::size_t identity_count() const { return folders_.size(); }

  const FaceRecord* find_face(FaceId id) const;
  const FaceRecord& face(FaceId id) const;  // throws ConsistencyError
  const IdentityFolder* find_folder(IdentityId id) const;

  std::span<const float> embedding(FaceId id) const;
  const float* embedding_ptr(FaceId id) const;

  // New corpus over the same faces with a different store. Row indices are
  // reused, so `store` must be aligned with this corpus's store.
  Corpus with_store(std::shared_ptr<const EmbeddingStore> store) const;

  // New corpus made of the given folders; member faces are copied with their
  // identity_id rewritten to the folder's id. Folder centres are kept.
  Corpus regroup(std::vector<IdentityFolder> folders) const;

  // Data-model equality: same faces, folders and per-face embedding bytes,
  // regardless of row placement in the store.
  bool equivalent(const Corpus& other) const;

 private:
  void validate() const;

  std::shared_ptr<const EmbeddingStore> store_;
  std::vector<FaceRecord> faces_;
  std::vector<IdentityFolder> folders_;
};

// --- file formats ---------------------------------------------------------

inline constexpr char kEmbeddingMagic[4] = {'E', 'M', 'B', '1'};
inline constexpr std::string_view kManifestMagic = "#MANIFEST1";

void write_embeddings(const std::filesystem::path& path,
                      const EmbeddingStore& store);
EmbeddingStore read_embeddings(const std::filesystem::path& path);

struct Manifest {
  std::size_t dim = 0;
  std::vector<FaceRecord> faces;  // file order
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

Corpus load_corpus(const std::filesystem::path& manifest_path,
                   const std::filesystem::path& embeddings_path);

// Writes faces in ascending face_id order with compacted rows.
void write_corpus(const Corpus& corpus,
                  const std::filesystem::path& manifest_path,
                  const std::filesystem::path& embeddings_path);

}  // namespace castkit
