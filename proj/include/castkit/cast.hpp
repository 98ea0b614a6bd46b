#pragma once

// Self-training cleaning loop. Every iteration re-cleans the raw corpus with
// that iteration's embeddings (intra-class then inter-class); duplicate and
// test-overlap removal run once on the final iteration's output.

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "castkit/cluster.hpp"
#include "castkit/corpus.hpp"
#include "castkit/merge.hpp"
#include "castkit/stats.hpp"

namespace castkit {

// Produces one embedding per face of the raw corpus for a given iteration
// (0-based). The returned store must be row-aligned with raw.store().
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::shared_ptr<const EmbeddingStore> provide(std::size_t iteration,
                                                        const Corpus& raw) = 0;
};

// Uses the corpus's own embeddings every iteration.
class StoredEmbeddingProvider final : public EmbeddingProvider {
 public:
  std::shared_ptr<const EmbeddingStore> provide(std::size_t iteration,
                                                const Corpus& raw) override;
};

// Stored embeddings plus isotropic Gaussian noise whose scale shrinks with
// the iteration, standing in for a teacher model that improves each round.
// A row v becomes normalize(v + scale * g / sqrt(dim)), g ~ N(0, I).
class ShrinkingNoiseProvider final : public EmbeddingProvider {
 public:
  ShrinkingNoiseProvider(std::vector<double> scales, std::uint64_t seed);
  std::shared_ptr<const EmbeddingStore> provide(std::size_t iteration,
                                                const Corpus& raw) override;

 private:
  std::vector<double> scales_;
  std::uint64_t seed_;
};

// Reads iteration i's embeddings from paths[i] (last path reused).
class FileSequenceProvider final : public EmbeddingProvider {
 public:
  explicit FileSequenceProvider(std::vector<std::filesystem::path> paths);
  std::shared_ptr<const EmbeddingStore> provide(std::size_t iteration,
                                                const Corpus& raw) override;

 private:
  std::vector<std::filesystem::path> paths_;
};

// "stored", "noise:0.3,0.2,0.1@7" (scales, optional seed) or
// "files:a.emb,b.emb,c.emb".
std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec);

struct CastConfig {
  std::size_t iterations = 3;
  std::vector<double> similarity_schedule{0.5, 0.55, 0.6};
  std::size_t min_pts = 3;
  double merge_threshold = 0.7;
  double delete_threshold = 0.5;
  double dedup_threshold = 0.95;
  double overlap_threshold = 0.7;
  std::size_t histogram_sample_folders = 1000;  // 0 disables histograms
  std::uint64_t histogram_seed = 0;

  void validate() const;  // throws ConfigError
};

// Plain "key = value" text, '#' comments; unknown keys are rejected.
CastConfig parse_cast_config(const std::string& text);
CastConfig load_cast_config(const std::filesystem::path& path);

struct IterationOutput {
  std::size_t iteration = 0;  // 0-based
  std::shared_ptr<const EmbeddingStore> embeddings;
  MergePlan plan;
  Corpus cleaned;  // after inter-class cleaning
};

struct CastOptions {
  std::size_t workers = 1;
  std::optional<CenterIndex> exclusion;  // overlap stage skipped when absent
  std::function<void(const IterationOutput&)> on_iteration;
};

struct CastResult {
  Corpus corpus;  // carries the final iteration's embeddings
  std::vector<StageStats> stages;
  std::vector<MergePlan> plans;  // one per iteration
};

CastResult run_cast(const Corpus& raw, EmbeddingProvider& provider,
                    const CastConfig& config, const CastOptions& options = {});

// stage_stats.jsonl plus histograms/<NN>_<stage>.csv under `dir`.
void write_stage_report(const std::filesystem::path& dir,
                        const std::vector<StageStats>& stages);

}  // namespace castkit
