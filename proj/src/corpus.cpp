#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <unordered_set>

#include "castkit/corpus.hpp"
#include "castkit/errors.hpp"
#include "castkit/simd.hpp"

namespace castkit {

std::string_view to_string(Race race) {
  switch (race) {
    case Race::kCaucasian: return "Caucasian";
    case Race::kEastAsian: return "EastAsian";
    case Race::kAfrican: return "African";
    case Race::kOther: return "Other";
  }
  return "Other";
}

std::string_view to_string(Gender gender) {
  return gender == Gender::kMale ? "Male" : "Female";
}

std::string_view to_string(Scenario scenario) {
  return scenario == Scenario::kControlled ? "Controlled" : "Wild";
}

std::optional<Race> parse_race(std::string_view text) {
  if (text == "Caucasian") return Race::kCaucasian;
  if (text == "EastAsian") return Race::kEastAsian;
  if (text == "African") return Race::kAfrican;
  if (text == "Other") return Race::kOther;
  return std::nullopt;
}

std::optional<Gender> parse_gender(std::string_view text) {
  if (text == "Male") return Gender::kMale;
  if (text == "Female") return Gender::kFemale;
  return std::nullopt;
}

std::optional<Scenario> parse_scenario(std::string_view text) {
  if (text == "Controlled") return Scenario::kControlled;
  if (text == "Wild") return Scenario::kWild;
  return std::nullopt;
}

bool normalize_in_place(std::span<float> values) {
  double sum = 0.0;
  for (float v : values) sum += static_cast<double>(v) * v;
  const double norm = std::sqrt(sum);
  if (!(norm > 0.0) || !std::isfinite(norm)) return false;
  if (std::abs(norm - 1.0) <= 1e-6) return true;
  for (float& v : values) v = static_cast<float>(v / norm);
  return true;
}

float cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size())
    throw DimensionError("cosine_similarity: dimension mismatch (" +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  return std::clamp(simd::dot(a.data(), b.data(), a.size()), -1.0f, 1.0f);
}

// --- EmbeddingStore ---------------------------------------------------------

EmbeddingStore::EmbeddingStore(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw DimensionError("embedding dimension must be positive");
}

EmbeddingStore EmbeddingStore::from_rows(std::size_t dim,
                                         std::vector<float> data) {
  EmbeddingStore store(dim);
  if (data.size() % dim != 0)
    throw ConsistencyError("embedding data is not a whole number of rows");
  const std::size_t rows = data.size() / dim;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!normalize_in_place({data.data() + r * dim, dim}))
      throw IngestError("embedding row " + std::to_string(r) +
                        " has zero or non-finite norm");
  }
  store.data_ = std::move(data);
  return store;
}

std::size_t EmbeddingStore::append(std::span<const float> values) {
  if (values.size() != dim_)
    throw DimensionError("append: expected dim " + std::to_string(dim_) +
                         ", got " + std::to_string(values.size()));
  const std::size_t index = row_count();
  data_.insert(data_.end(), values.begin(), values.end());
  if (!normalize_in_place({data_.data() + index * dim_, dim_})) {
    data_.resize(index * dim_);
    throw IngestError("appended embedding has zero or non-finite norm");
  }
  return index;
}

// --- Corpus -----------------------------------------------------------------

namespace {

bool by_face(const FaceRecord& a, const FaceRecord& b) {
  return a.face_id < b.face_id;
}

}  // namespace

Corpus Corpus::from_faces(std::shared_ptr<const EmbeddingStore> store,
                          std::vector<FaceRecord> faces) {
  Corpus corpus;
  corpus.store_ = std::move(store);
  std::sort(faces.begin(), faces.end(), by_face);
  corpus.faces_ = std::move(faces);

  std::vector<std::pair<IdentityId, FaceId>> keyed;
  keyed.reserve(corpus.faces_.size());
  for (const auto& f : corpus.faces_) keyed.emplace_back(f.identity_id, f.face_id);
  std::sort(keyed.begin(), keyed.end());
  for (const auto& [identity, face] : keyed) {
    if (corpus.folders_.empty() || corpus.folders_.back().identity_id != identity)
      corpus.folders_.push_back(IdentityFolder{identity, {}, std::nullopt});
    corpus.folders_.back().members.push_back(face);
  }
  corpus.validate();
  return corpus;
}

const FaceRecord* Corpus::find_face(FaceId id) const {
  auto it = std::lower_bound(
      faces_.begin(), faces_.end(), id,
      [](const FaceRecord& f, FaceId key) { return f.face_id < key; });
  if (it == faces_.end() || it->face_id != id) return nullptr;
  return &*it;
}

const FaceRecord& Corpus::face(FaceId id) const {
  const FaceRecord* f = find_face(id);
  if (!f)
    throw ConsistencyError("unknown face_id " + std::to_string(id.value));
  return *f;
}

const IdentityFolder* Corpus::find_folder(IdentityId id) const {
  auto it = std::lower_bound(
      folders_.begin(), folders_.end(), id,
      [](const IdentityFolder& f, IdentityId key) { return f.identity_id < key; });
  if (it == folders_.end() || it->identity_id != id) return nullptr;
  return &*it;
}

std::span<const float> Corpus::embedding(FaceId id) const {
  return store_->row(face(id).embedding_index);
}

const float* Corpus::embedding_ptr(FaceId id) const {
  return store_->row_ptr(face(id).embedding_index);
}

Corpus Corpus::with_store(std::shared_ptr<const EmbeddingStore> store) const {
  Corpus out = *this;
  out.store_ = std::move(store);
  for (auto& folder : out.folders_) folder.center.reset();
  out.validate();
  return out;
}

Corpus Corpus::regroup(std::vector<IdentityFolder> folders) const {
  Corpus out;
  out.store_ = store_;
  std::sort(folders.begin(), folders.end(),
            [](const IdentityFolder& a, const IdentityFolder& b) {
              return a.identity_id < b.identity_id;
            });
  std::size_t total = 0;
  for (const auto& folder : folders) total += folder.members.size();
  out.faces_.reserve(total);
  for (auto& folder : folders) {
    std::sort(folder.members.begin(), folder.members.end());
    for (FaceId id : folder.members) {
      FaceRecord record = face(id);
      record.identity_id = folder.identity_id;
      out.faces_.push_back(record);
    }
  }
  std::sort(out.faces_.begin(), out.faces_.end(), by_face);
  out.folders_ = std::move(folders);
  out.validate();
  return out;
}

void Corpus::validate() const {
  const std::size_t rows = store_->row_count();
  for (std::size_t i = 0; i < faces_.size(); ++i) {
    if (i > 0 && faces_[i - 1].face_id == faces_[i].face_id)
      throw ConsistencyError("duplicate face_id " +
                             std::to_string(faces_[i].face_id.value));
    if (faces_[i].embedding_index >= rows)
      throw ConsistencyError("face " + std::to_string(faces_[i].face_id.value) +
                             " references embedding row " +
                             std::to_string(faces_[i].embedding_index) +
                             " beyond row_count " + std::to_string(rows));
  }
  std::size_t members = 0;
  for (std::size_t i = 0; i < folders_.size(); ++i) {
    const auto& folder = folders_[i];
    if (i > 0 && !(folders_[i - 1].identity_id < folder.identity_id))
      throw ConsistencyError("duplicate identity_id " +
                             std::to_string(folder.identity_id.value));
    if (folder.members.empty())
      throw ConsistencyError("identity folder " +
                             std::to_string(folder.identity_id.value) +
                             " is empty");
    for (std::size_t m = 0; m < folder.members.size(); ++m) {
      if (m > 0 && !(folder.members[m - 1] < folder.members[m]))
        throw ConsistencyError("folder " +
                               std::to_string(folder.identity_id.value) +
                               " has duplicate or unsorted members");
      const FaceRecord* f = find_face(folder.members[m]);
      if (!f || f->identity_id != folder.identity_id)
        throw ConsistencyError(
            "folder " + std::to_string(folder.identity_id.value) +
            " member " + std::to_string(folder.members[m].value) +
            " does not resolve to a face of that identity");
    }
    if (folder.center) {
      if (folder.center->size() != store_->dim())
        throw DimensionError("folder center has wrong dimension");
      double sum = 0.0;
      for (float v : *folder.center) sum += static_cast<double>(v) * v;
      if (std::abs(std::sqrt(sum) - 1.0) > kUnitNormTolerance)
        throw ConsistencyError("folder center is not unit norm");
    }
    members += folder.members.size();
  }
  if (members != faces_.size())
    throw ConsistencyError("faces not covered by exactly one folder");
}

bool Corpus::equivalent(const Corpus& other) const {
  if (dim() != other.dim() || faces_.size() != other.faces_.size() ||
      folders_.size() != other.folders_.size())
    return false;
  for (std::size_t i = 0; i < faces_.size(); ++i) {
    const auto& a = faces_[i];
    const auto& b = other.faces_[i];
    if (a.face_id != b.face_id || a.identity_id != b.identity_id ||
        a.attributes != b.attributes)
      return false;
    const auto ra = store_->row(a.embedding_index);
    const auto rb = other.store_->row(b.embedding_index);
    if (std::memcmp(ra.data(), rb.data(), ra.size_bytes()) != 0) return false;
  }
  for (std::size_t i = 0; i < folders_.size(); ++i) {
    if (folders_[i].identity_id != other.folders_[i].identity_id ||
        folders_[i].members != other.folders_[i].members)
      return false;
  }
  return true;
}

}  // namespace castkit
