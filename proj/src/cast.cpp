#include "castkit/cast.hpp"

#include "castkit/dedup.hpp"
#include "castkit/errors.hpp"

namespace castkit {
namespace {

void attach_histograms(StageStats& stats, const Corpus& corpus,
                       const CastConfig& config, std::size_t workers) {
  if (config.histogram_sample_folders == 0) return;
  const auto d = similarity_distributions(corpus, config.histogram_sample_folders,
                                          config.histogram_seed, workers);
  stats.intra_similarity_histogram = d.intra;
  stats.inter_similarity_histogram = d.inter;
}

std::string prefixed(std::size_t iteration, const std::string& stage) {
  return "iter" + std::to_string(iteration + 1) + "/" + stage;
}

}  // namespace

CastResult run_cast(const Corpus& raw, EmbeddingProvider& provider,
                    const CastConfig& config, const CastOptions& options) {
  config.validate();
  const std::size_t workers = options.workers;
  CastResult result;
  std::optional<std::size_t> dim;

  for (std::size_t it = 0; it < config.iterations; ++it) {
    Corpus view;
    std::shared_ptr<const EmbeddingStore> embeddings;
    try {
      embeddings = provider.provide(it, raw);
      if (!embeddings) throw ProviderError("provider returned no embeddings");
      if (dim && embeddings->dim() != *dim)
        throw DimensionError("embedding dim changed from " +
                             std::to_string(*dim) + " to " +
                             std::to_string(embeddings->dim()));
      dim = embeddings->dim();
      view = raw.with_store(embeddings);
    } catch (const std::exception& e) {
      throw ProviderError("iteration " + std::to_string(it + 1) +
                          ": embedding provider failed: " + e.what());
    }

    if (it == 0) {
      StageStats initial = make_stage_stats("initial", view, view);
      attach_histograms(initial, view, config, workers);
      result.stages.push_back(std::move(initial));
    }

    const auto params = DbscanParams::from_similarity(
        config.similarity_schedule[it], config.min_pts);
    auto [intra, intra_stats] = intra_class_clean(view, params, workers);
    intra_stats.stage_name = prefixed(it, intra_stats.stage_name);
    attach_histograms(intra_stats, intra, config, workers);
    result.stages.push_back(std::move(intra_stats));

    const auto centers = compute_centers(intra, workers);
    MergePlan plan = plan_inter_class(
        centers.index, {config.merge_threshold, config.delete_threshold}, workers);
    auto [inter, inter_stats] = apply_inter_class(intra, plan);
    inter_stats.stage_name = prefixed(it, inter_stats.stage_name);
    attach_histograms(inter_stats, inter, config, workers);
    result.stages.push_back(std::move(inter_stats));

    if (options.on_iteration)
      options.on_iteration(IterationOutput{it, embeddings, plan, inter});
    result.plans.push_back(std::move(plan));
    result.corpus = std::move(inter);
  }

  auto [deduped, dedup_stats] =
      remove_duplicates(result.corpus, config.dedup_threshold, workers);
  attach_histograms(dedup_stats, deduped, config, workers);
  result.stages.push_back(std::move(dedup_stats));
  result.corpus = std::move(deduped);

  if (options.exclusion) {
    auto [filtered, overlap_stats] = remove_test_overlap(
        result.corpus, *options.exclusion, config.overlap_threshold, workers);
    attach_histograms(overlap_stats, filtered, config, workers);
    result.stages.push_back(std::move(overlap_stats));
    result.corpus = std::move(filtered);
  }
  return result;
}

}  // namespace castkit
