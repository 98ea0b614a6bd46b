#pragma once

#include <cmath>
#include <filesystem>
#include <memory>
#include <vector>

#include <unistd.h>

#include "castkit/corpus.hpp"
#include "castkit/random.hpp"

namespace castkit::test {

struct Face {
  std::uint64_t face_id;
  std::uint64_t identity_id;
  std::vector<float> embedding;
  AttributeSet attributes{};
};

inline Corpus make_corpus(const std::vector<Face>& faces) {
  if (faces.empty()) return Corpus{};
  const std::size_t dim = faces.front().embedding.size();
  std::vector<float> data;
  std::vector<FaceRecord> records;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    data.insert(data.end(), faces[i].embedding.begin(), faces[i].embedding.end());
    records.push_back({FaceId{faces[i].face_id}, IdentityId{faces[i].identity_id}, i,
                       faces[i].attributes});
  }
  auto store = std::make_shared<const EmbeddingStore>(EmbeddingStore::from_rows(dim, data));
  return Corpus::from_faces(store, records);
}

inline std::vector<float> axis(std::size_t dim, std::size_t k) {
  std::vector<float> v(dim, 0.0f);
  v[k] = 1.0f;
  return v;
}

// Unit vector at cosine `s` from axis i, rotated towards axis j.
inline std::vector<float> at_similarity(std::size_t dim, std::size_t i, std::size_t j,
                                        double s) {
  std::vector<float> v(dim, 0.0f);
  v[i] = static_cast<float>(s);
  v[j] = static_cast<float>(std::sqrt(1.0 - s * s));
  return v;
}

inline std::vector<float> random_unit(Rng& rng, std::size_t dim) {
  std::vector<float> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    x = static_cast<float>(rng.normal());
    norm += double(x) * x;
  }
  for (auto& x : v) x = static_cast<float>(x / std::sqrt(norm));
  return v;
}

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() /
           ("castkit_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace castkit::test
