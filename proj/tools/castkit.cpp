// castkit: command-line front end for corpus cleaning and verification
// evaluation.
//
// Exit codes: 0 success, 1 internal error, 2 usage error, 3 data error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "castkit/cast.hpp"
#include "castkit/dedup.hpp"
#include "castkit/errors.hpp"
#include "castkit/fruits.hpp"
#include "castkit/simd.hpp"
#include "castkit/synth.hpp"

namespace fs = std::filesystem;
using namespace castkit;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

// Prefixes errors with the pipeline stage that raised them.
template <typename F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const DataError& e) {
    throw DataError(name + ": " + e.what());
  } catch (const Error& e) {
    throw Error(name + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(name + ": " + e.what());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw IoError(path.string() + ": write failed");
}

std::optional<CenterIndex> load_exclusion(const std::string& manifest,
                                          const std::string& embeddings) {
  if (manifest.empty() && embeddings.empty()) return std::nullopt;
  if (manifest.empty() || embeddings.empty())
    throw ConfigError("exclusion set needs both --exclusion-manifest and --exclusion-embeddings");
  return center_index_from_corpus(load_corpus(manifest, embeddings));
}

// --- clean ------------------------------------------------------------------

struct CleanArgs {
  std::string config, manifest, embeddings, provider = "stored", out;
  std::string exclusion_manifest, exclusion_embeddings;
  std::size_t workers = 1;
};

void run_clean(const CleanArgs& args) {
  const CastConfig config = stage("config", [&] { return load_cast_config(args.config); });
  const Corpus raw = stage("load", [&] { return load_corpus(args.manifest, args.embeddings); });
  auto exclusion = stage("exclusion", [&] {
    return load_exclusion(args.exclusion_manifest, args.exclusion_embeddings);
  });
  auto provider = stage("provider", [&] { return make_provider(args.provider); });

  CastOptions options;
  options.workers = args.workers;
  options.exclusion = std::move(exclusion);
  const CastResult result =
      stage("cast", [&] { return run_cast(raw, *provider, config, options); });

  stage("write", [&] {
    const fs::path out(args.out);
    fs::create_directories(out);
    write_corpus(result.corpus, out / "manifest.tsv", out / "embeddings.emb");
    write_stage_report(out, result.stages);
    for (std::size_t i = 0; i < result.plans.size(); ++i)
      write_merge_plan(out / ("merge_plan_iter" + std::to_string(i + 1) + ".tsv"),
                       result.plans[i]);
    return 0;
  });
  for (const auto& s : result.stages)
    std::printf("%-24s identities %zu -> %zu  faces %zu -> %zu\n", s.stage_name.c_str(),
                s.identities_before, s.identities_after, s.faces_before, s.faces_after);
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string manifest, embeddings, out, matcher, track, group_fnmrs;
  std::string slices = "All";
  double fmr = 1e-5;
  std::size_t impostor_cap = fruits::kDefaultImpostorCap;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t probe_pairs = 30;
  bool flip = false;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) items.push_back(item);
  return items;
}

nlohmann::ordered_json fairness_json(const std::map<std::string, double>& groups) {
  nlohmann::ordered_json block;
  nlohmann::ordered_json per_group;
  for (const auto& [g, v] : groups) per_group[g] = v;
  block["groups"] = per_group;
  try {
    const auto m = fruits::fairness_metrics(groups);
    block["avg"] = fruits::format_fixed(m.avg, 4);
    block["std"] = fruits::format_fixed(m.std, 4);
    block["ser"] = fruits::format_fixed(m.ser, 2);
  } catch (const UndefinedMetricError& e) {
    block["error"] = e.what();
  }
  return block;
}

std::map<std::string, std::map<std::string, double>> read_group_fnmrs(const fs::path& path) {
  std::map<std::string, std::map<std::string, double>> out;
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string category, group, value;
    if (!std::getline(fields, category, '\t') || !std::getline(fields, group, '\t') ||
        !std::getline(fields, value))
      throw FormatError(path.string() + ": line " + std::to_string(line_no) +
                        ": expected category<TAB>group<TAB>fnmr");
    try {
      out[category][group] = std::stod(value);
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": line " + std::to_string(line_no) + ": bad fnmr");
    }
  }
  return out;
}

void run_evaluate(const EvaluateArgs& args) {
  const fs::path out(args.out);
  fs::create_directories(out);
  nlohmann::ordered_json report;
  std::ostringstream text;
  std::optional<Corpus> corpus;
  std::unique_ptr<fruits::Matcher> matcher;
  std::optional<fruits::TimeBudget> budget;

  if (!args.track.empty()) {
    const auto track = fruits::parse_track(args.track);
    if (!track) throw ConfigError("unknown track '" + args.track + "'");
    budget = fruits::TimeBudget::for_track(*track, args.flip);
  }

  if (!args.manifest.empty()) {
    corpus = stage("load", [&] { return load_corpus(args.manifest, args.embeddings); });
    if (!args.matcher.empty()) {
      auto ext = std::make_unique<fruits::ExternalMatcher>(fruits::split_command(args.matcher),
                                                           out / "matcher_io");
      if (budget)
        ext->set_timeout(std::chrono::milliseconds(
            static_cast<long>(10.0 * budget->budget_ms())));
      matcher = std::move(ext);
    } else {
      matcher = std::make_unique<fruits::EmbeddingMatcher>(*corpus);
    }

    report["fmr"] = args.fmr;
    nlohmann::ordered_json slices = nlohmann::ordered_json::array();
    char row[256];
    std::snprintf(row, sizeof row, "%-20s %10s %12s %10s %14s\n", "slice", "genuine",
                  "impostor", "fnmr", "threshold");
    text << "FNMR@FMR=" << args.fmr << "\n" << row;

    std::map<std::string, double> race_groups, gender_groups;
    const std::vector<std::string> requested = split_list(args.slices);
    std::vector<std::string> wanted = requested;
    for (const char* g : {"Race-Caucasian", "Race-EastAsian", "Race-African",
                          "Gender-Male", "Gender-Female"})
      if (std::find(wanted.begin(), wanted.end(), g) == wanted.end()) wanted.push_back(g);

    for (const auto& name : wanted) {
      const auto slice = fruits::SliceSpec::parse(name);
      if (!slice) throw ProtocolError("unknown slice '" + name + "'");
      const bool fairness_only =
          std::find(requested.begin(), requested.end(), name) == requested.end();
      fruits::PairProtocol protocol;
      try {
        protocol = stage("protocol", [&] {
          return fruits::build_protocol(*corpus, *slice, args.seed, args.impostor_cap);
        });
      } catch (const DataError&) {
        if (fairness_only) continue;  // attribute absent: no fairness group
        throw;
      }
      const fruits::ScoreSet scores =
          args.matcher.empty() ? fruits::score_protocol(protocol, *corpus, args.workers)
                               : stage("matcher", [&] {
                                   return fruits::score_protocol(protocol, *matcher);
                                 });
      nlohmann::ordered_json entry;
      entry["slice"] = protocol.slice_name;
      entry["genuine_pairs"] = protocol.genuine_pairs.size();
      entry["impostor_pairs"] = protocol.impostor_pairs.size();
      std::string fnmr_text = "n/a", thr_text = "n/a";
      try {
        const auto r = fruits::fnmr_at_fmr(scores, args.fmr);
        entry["fnmr"] = r.fnmr;
        entry["threshold"] = std::isinf(r.threshold) ? nlohmann::ordered_json("inf")
                                                     : nlohmann::ordered_json(r.threshold);
        fnmr_text = fruits::format_fixed(r.fnmr, 4);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", r.threshold);
        thr_text = buf;
        if (slice->kind == fruits::SliceKind::kRace)
          race_groups[std::string(to_string(*slice->race))] = r.fnmr;
        if (slice->kind == fruits::SliceKind::kGender)
          gender_groups[std::string(to_string(*slice->gender))] = r.fnmr;
      } catch (const DataError& e) {
        entry["error"] = e.what();
      }
      if (fairness_only) continue;
      slices.push_back(entry);
      std::snprintf(row, sizeof row, "%-20s %10zu %12zu %10s %14s\n",
                    protocol.slice_name.c_str(), protocol.genuine_pairs.size(),
                    protocol.impostor_pairs.size(), fnmr_text.c_str(), thr_text.c_str());
      text << row;
    }
    report["slices"] = slices;
    report["fairness"]["race"] = fairness_json(race_groups);
    report["fairness"]["gender"] = fairness_json(gender_groups);
  }

  if (!args.group_fnmrs.empty()) {
    const auto groups = stage("fairness", [&] { return read_group_fnmrs(args.group_fnmrs); });
    for (const auto& [category, values] : groups)
      report["fairness"][category] = fairness_json(values);
  }
  if (report.contains("fairness")) {
    text << "\nfairness\n";
    for (const auto& [category, block] : report["fairness"].items()) {
      if (block.contains("error"))
        text << "  " << category << ": " << block["error"].get<std::string>() << "\n";
      else
        text << "  " << category << ": avg " << block["avg"].get<std::string>() << "  std "
             << block["std"].get<std::string>() << "  ser "
             << block["ser"].get<std::string>() << "\n";
    }
  }

  if (budget) {
    std::unique_ptr<fruits::Matcher> timing_matcher;
    if (!args.matcher.empty()) {
      auto ext = std::make_unique<fruits::ExternalMatcher>(fruits::split_command(args.matcher),
                                                           out / "matcher_io");
      ext->set_timeout(std::chrono::milliseconds(static_cast<long>(10.0 * budget->budget_ms())));
      timing_matcher = std::move(ext);
    } else if (corpus) {
      timing_matcher = std::make_unique<fruits::EmbeddingMatcher>(*corpus);
    } else {
      throw ConfigError("--track needs --matcher or a corpus");
    }
    std::vector<fruits::FacePair> probes;
    if (corpus && corpus->face_count() >= 2) {
      for (std::size_t i = 0; probes.size() < args.probe_pairs && i + 1 < corpus->face_count(); ++i)
        probes.push_back({corpus->faces()[i].face_id, corpus->faces()[i + 1].face_id});
    } else {
      probes.push_back({FaceId{1}, FaceId{2}});
    }
    fruits::LatencyResult lat;
    std::string failure;
    try {
      lat = fruits::measure_latency(*timing_matcher, probes, *budget);
    } catch (const MatcherError& e) {
      failure = e.what();
    }
    nlohmann::ordered_json latency;
    latency["track"] = std::string(fruits::to_string(budget->track));
    latency["budget_ms"] = budget->budget_ms();
    latency["flip"] = budget->flip;
    latency["batch_size"] = budget->batch_size();
    latency["result"] = failure.empty() && lat.pass ? "PASS" : "FAIL";
    if (!failure.empty()) latency["error"] = failure;
    report["latency"] = latency;

    nlohmann::ordered_json timing = latency;
    timing["median_ms"] = lat.median_ms;
    timing["samples_ms"] = lat.samples_ms;
    write_text(out / "latency.json", timing.dump(2) + "\n");
    text << "\nlatency " << fruits::to_string(budget->track) << " (budget "
         << budget->budget_ms() << " ms): " << latency["result"].get<std::string>() << "\n";
    std::printf("latency %s: median %.3f ms, budget %.0f ms -> %s\n",
                std::string(fruits::to_string(budget->track)).c_str(), lat.median_ms,
                budget->budget_ms(), latency["result"].get<std::string>().c_str());
  }

  write_text(out / "report.json", report.dump(2) + "\n");
  write_text(out / "report.txt", text.str());
  std::fputs(text.str().c_str(), stdout);
}

// --- gen-synth / dedup / stats ----------------------------------------------

void run_gen_synth(const std::string& config, std::uint64_t seed, bool seed_given,
                   const std::string& out_dir) {
  SynthSpec spec = config.empty() ? SynthSpec{} : parse_synth_spec(read_text(config));
  if (seed_given) spec.seed = seed;
  const SynthResult synth = stage("generate", [&] { return generate(spec); });
  stage("write", [&] {
    const fs::path out(out_dir);
    fs::create_directories(out);
    write_corpus(synth.corpus, out / "manifest.tsv", out / "embeddings.emb");
    write_ground_truth(out / "ground_truth.tsv", synth.truth);
    write_split_pairs(out / "split_pairs.tsv", synth.truth);
    write_corpus(exclusion_corpus(synth.truth.exclusion), out / "exclusion_manifest.tsv",
                 out / "exclusion.emb");
    return 0;
  });
  std::printf("generated %zu identities, %zu faces\n", synth.corpus.identity_count(),
              synth.corpus.face_count());
}

void run_dedup(const std::string& manifest, const std::string& embeddings,
               const std::string& out_dir, double threshold, const std::string& excl_manifest,
               const std::string& excl_embeddings, double overlap_threshold,
               std::size_t workers) {
  Corpus corpus = stage("load", [&] { return load_corpus(manifest, embeddings); });
  const auto exclusion =
      stage("exclusion", [&] { return load_exclusion(excl_manifest, excl_embeddings); });
  std::vector<StageStats> stats;
  auto [deduped, s1] = remove_duplicates(corpus, threshold, workers);
  stats.push_back(s1);
  corpus = std::move(deduped);
  if (exclusion) {
    auto [filtered, s2] = stage("overlap", [&] {
      return remove_test_overlap(corpus, *exclusion, overlap_threshold, workers);
    });
    stats.push_back(s2);
    corpus = std::move(filtered);
  }
  stage("write", [&] {
    const fs::path out(out_dir);
    fs::create_directories(out);
    write_corpus(corpus, out / "manifest.tsv", out / "embeddings.emb");
    write_stage_report(out, stats);
    return 0;
  });
  for (const auto& s : stats)
    std::printf("%-20s identities %zu -> %zu  faces %zu -> %zu\n", s.stage_name.c_str(),
                s.identities_before, s.identities_after, s.faces_before, s.faces_after);
}

void run_stats(const std::string& manifest, const std::string& embeddings,
               const std::string& out_dir, std::size_t sample, std::uint64_t seed,
               std::size_t workers) {
  const Corpus corpus = stage("load", [&] { return load_corpus(manifest, embeddings); });
  StageStats s = make_stage_stats("stats", corpus, corpus);
  const auto d = similarity_distributions(corpus, sample, seed, workers);
  s.intra_similarity_histogram = d.intra;
  s.inter_similarity_histogram = d.inter;
  stage("write", [&] {
    write_stage_report(out_dir, {s});
    return 0;
  });
  std::printf("intra pairs %llu, inter pairs %llu, overlap %.6f\n",
              static_cast<unsigned long long>(d.intra.total()),
              static_cast<unsigned long long>(d.inter.total()),
              overlap_integral(d.intra, d.inter));
}

// Reference external matcher: sleeps, then scores every pair `score`.
int run_dummy_matcher(double sleep_ms, double score, const std::string& pairs_path,
                      const std::string& scores_path) {
  std::ifstream in(pairs_path);
  if (!in) return kExitData;
  std::size_t lines = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(sleep_ms));
  std::ofstream out(scores_path, std::ios::binary | std::ios::trunc);
  for (std::size_t i = 0; i < lines; ++i) out << score << '\n';
  return out ? 0 : kExitInternal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"castkit: self-training face corpus cleaning and verification evaluation"};
  app.require_subcommand(1);
  std::string simd_level;
  app.add_option("--simd", simd_level, "Kernel level override: scalar or avx2");

  CleanArgs clean;
  auto* clean_cmd = app.add_subcommand("clean", "Run the iterative cleaning pipeline");
  clean_cmd->add_option("--config", clean.config, "Pipeline config file")->required();
  clean_cmd->add_option("--manifest", clean.manifest, "Input manifest")->required();
  clean_cmd->add_option("--embeddings", clean.embeddings, "Input embedding file")->required();
  clean_cmd->add_option("--provider", clean.provider,
                        "stored | noise:s1,s2,...@seed | files:a.emb,b.emb,...");
  clean_cmd->add_option("--out", clean.out, "Output directory")->required();
  clean_cmd->add_option("--exclusion-manifest", clean.exclusion_manifest);
  clean_cmd->add_option("--exclusion-embeddings", clean.exclusion_embeddings);
  clean_cmd->add_option("--workers", clean.workers)->check(CLI::PositiveNumber);

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Verification metrics, fairness and latency");
  eval_cmd->add_option("--manifest", eval.manifest);
  eval_cmd->add_option("--embeddings", eval.embeddings);
  eval_cmd->add_option("--slices", eval.slices, "Comma-separated slice names");
  eval_cmd->add_option("--fmr", eval.fmr);
  eval_cmd->add_option("--impostor-cap", eval.impostor_cap);
  eval_cmd->add_option("--seed", eval.seed);
  eval_cmd->add_option("--matcher", eval.matcher, "External matcher command");
  eval_cmd->add_option("--track", eval.track, "FRUITS-100 | FRUITS-500 | FRUITS-1000");
  eval_cmd->add_flag("--flip", eval.flip, "Flip test (batch size 2)");
  eval_cmd->add_option("--probe-pairs", eval.probe_pairs);
  eval_cmd->add_option("--group-fnmrs", eval.group_fnmrs,
                       "TSV of category, group, fnmr for a standalone fairness block");
  eval_cmd->add_option("--workers", eval.workers)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--out", eval.out)->required();

  std::string synth_config, synth_out;
  std::uint64_t synth_seed = 0;
  auto* synth_cmd = app.add_subcommand("gen-synth", "Generate a synthetic noisy corpus");
  synth_cmd->add_option("--config", synth_config, "Synthetic spec file");
  auto* seed_opt = synth_cmd->add_option("--seed", synth_seed);
  synth_cmd->add_option("--out", synth_out)->required();

  std::string d_manifest, d_embeddings, d_out, d_excl_m, d_excl_e;
  double d_threshold = kDefaultDedupThreshold, d_overlap = kDefaultOverlapThreshold;
  std::size_t d_workers = 1;
  auto* dedup_cmd = app.add_subcommand("dedup", "Remove duplicates and test-set overlaps");
  dedup_cmd->add_option("--manifest", d_manifest)->required();
  dedup_cmd->add_option("--embeddings", d_embeddings)->required();
  dedup_cmd->add_option("--out", d_out)->required();
  dedup_cmd->add_option("--threshold", d_threshold);
  dedup_cmd->add_option("--exclusion-manifest", d_excl_m);
  dedup_cmd->add_option("--exclusion-embeddings", d_excl_e);
  dedup_cmd->add_option("--overlap-threshold", d_overlap);
  dedup_cmd->add_option("--workers", d_workers)->check(CLI::PositiveNumber);

  std::string s_manifest, s_embeddings, s_out;
  std::size_t s_sample = 100000, s_workers = 1;
  std::uint64_t s_seed = 0;
  auto* stats_cmd = app.add_subcommand("stats", "Intra/inter similarity histograms");
  stats_cmd->add_option("--manifest", s_manifest)->required();
  stats_cmd->add_option("--embeddings", s_embeddings)->required();
  stats_cmd->add_option("--out", s_out)->required();
  stats_cmd->add_option("--sample-folders", s_sample);
  stats_cmd->add_option("--seed", s_seed);
  stats_cmd->add_option("--workers", s_workers)->check(CLI::PositiveNumber);

  double m_sleep = 0.0, m_score = 0.0;
  std::string m_pairs, m_scores;
  auto* matcher_cmd =
      app.add_subcommand("dummy-matcher", "Sleep-based external matcher for harness checks");
  matcher_cmd->add_option("--sleep-ms", m_sleep);
  matcher_cmd->add_option("--score", m_score);
  matcher_cmd->add_option("pairs", m_pairs)->required();
  matcher_cmd->add_option("scores", m_scores)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (!simd_level.empty()) {
      const auto level = simd::parse_level(simd_level);
      if (!level || !simd::level_supported(*level)) {
        std::fprintf(stderr, "error: unsupported --simd level '%s'\n", simd_level.c_str());
        return kExitUsage;
      }
      simd::set_level(*level);
    }
    if (*clean_cmd) run_clean(clean);
    if (*eval_cmd) {
      if (eval.manifest.empty() != eval.embeddings.empty()) {
        std::fprintf(stderr, "error: --manifest and --embeddings go together\n");
        return kExitUsage;
      }
      run_evaluate(eval);
    }
    if (*synth_cmd) run_gen_synth(synth_config, synth_seed, seed_opt->count() > 0, synth_out);
    if (*dedup_cmd)
      run_dedup(d_manifest, d_embeddings, d_out, d_threshold, d_excl_m, d_excl_e, d_overlap,
                d_workers);
    if (*stats_cmd) run_stats(s_manifest, s_embeddings, s_out, s_sample, s_seed, s_workers);
    if (*matcher_cmd) return run_dummy_matcher(m_sleep, m_score, m_pairs, m_scores);
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInternal;
  }
  return 0;
}
