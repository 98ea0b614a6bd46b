#include <cmath>
#include <sstream>

#include "castkit/cast.hpp"
#include "castkit/errors.hpp"
#include "castkit/random.hpp"

namespace castkit {

std::shared_ptr<const EmbeddingStore> StoredEmbeddingProvider::provide(
    std::size_t, const Corpus& raw) {
  return raw.store_ptr();
}

ShrinkingNoiseProvider::ShrinkingNoiseProvider(std::vector<double> scales,
                                               std::uint64_t seed)
    : scales_(std::move(scales)), seed_(seed) {
  if (scales_.empty()) throw ConfigError("noise provider needs at least one scale");
  for (double s : scales_)
    if (!(s >= 0.0)) throw ConfigError("noise scales must be non-negative");
}

std::shared_ptr<const EmbeddingStore> ShrinkingNoiseProvider::provide(
    std::size_t iteration, const Corpus& raw) {
  const EmbeddingStore& base = raw.store();
  const double scale = scales_[std::min(iteration, scales_.size() - 1)];
  const std::size_t dim = base.dim();
  const double per_dim = scale / std::sqrt(static_cast<double>(dim));
  Rng rng(mix_seed(seed_, iteration));
  std::vector<float> data(base.data().begin(), base.data().end());
  for (float& v : data) v = static_cast<float>(v + per_dim * rng.normal());
  return std::make_shared<const EmbeddingStore>(
      EmbeddingStore::from_rows(dim, std::move(data)));
}

FileSequenceProvider::FileSequenceProvider(
    std::vector<std::filesystem::path> paths)
    : paths_(std::move(paths)) {
  if (paths_.empty()) throw ConfigError("file provider needs at least one path");
}

std::shared_ptr<const EmbeddingStore> FileSequenceProvider::provide(
    std::size_t iteration, const Corpus&) {
  return std::make_shared<const EmbeddingStore>(
      read_embeddings(paths_[std::min(iteration, paths_.size() - 1)]));
}

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, sep))
    if (!part.empty()) parts.push_back(part);
  return parts;
}

}  // namespace

std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec) {
  if (spec == "stored") return std::make_unique<StoredEmbeddingProvider>();
  if (spec.rfind("noise:", 0) == 0) {
    std::string body = spec.substr(6);
    std::uint64_t seed = 0;
    if (auto at = body.find('@'); at != std::string::npos) {
      try {
        seed = std::stoull(body.substr(at + 1));
      } catch (const std::exception&) {
        throw ConfigError("bad provider seed in '" + spec + "'");
      }
      body = body.substr(0, at);
    }
    std::vector<double> scales;
    for (const auto& s : split(body, ',')) {
      try {
        scales.push_back(std::stod(s));
      } catch (const std::exception&) {
        throw ConfigError("bad noise scale '" + s + "'");
      }
    }
    return std::make_unique<ShrinkingNoiseProvider>(std::move(scales), seed);
  }
  if (spec.rfind("files:", 0) == 0) {
    std::vector<std::filesystem::path> paths;
    for (const auto& p : split(spec.substr(6), ',')) paths.emplace_back(p);
    return std::make_unique<FileSequenceProvider>(std::move(paths));
  }
  throw ConfigError("unknown provider spec '" + spec + "'");
}

}  // namespace castkit
