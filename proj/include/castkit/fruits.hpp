#pragma once

// 1:1 verification evaluation under an inference-time budget: attribute-
// sliced pair protocols, FNMR at a fixed FMR, demographic fairness metrics
// and single-core latency measurement.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "castkit/corpus.hpp"

namespace castkit::fruits {

struct FacePair {
  FaceId a;  // a < b
  FaceId b;
  friend auto operator<=>(const FacePair&, const FacePair&) = default;
};

enum class SliceKind {
  kAll,
  kCrossAge10,
  kCrossAge20,
  kControlled,
  kWild,
  kCrossScene,
  kControlledMasked,
  kWildMasked,
  kAllMasked,
  kRace,
  kGender,
};

struct SliceSpec {
  SliceKind kind = SliceKind::kAll;
  std::optional<Race> race;      // kRace
  std::optional<Gender> gender;  // kGender

  std::string name() const;
  // "All", "Cross-age-10", ..., "Race-EastAsian", "Gender-Female".
  static std::optional<SliceSpec> parse(std::string_view name);
};

struct PairProtocol {
  std::string slice_name;
  std::vector<FacePair> genuine_pairs;   // sorted
  std::vector<FacePair> impostor_pairs;  // sorted
};

inline constexpr std::size_t kDefaultImpostorCap = 10'000'000;

// Genuine pairs: every within-identity pair passing the slice predicate.
// Impostor pairs: every cross-identity passing pair when the candidate pair
// count fits in `impostor_cap`, otherwise a seeded sample of `impostor_cap`
// distinct pairs. Throws ProtocolError when no face carries an attribute the
// slice needs.
PairProtocol build_protocol(const Corpus& corpus, const SliceSpec& slice,
                            std::uint64_t seed,
                            std::size_t impostor_cap = kDefaultImpostorCap);

// Throws ProtocolError if any pair is a self-pair or mislabelled.
void validate_protocol(const PairProtocol& protocol, const Corpus& corpus);

struct ScoreSet {
  std::vector<double> genuine_scores;
  std::vector<double> impostor_scores;
};

struct FnmrResult {
  double fnmr = 0.0;
  double threshold = 0.0;  // may be +inf
};

// Threshold is the smallest value t with |{impostor >= t}| / N <= target,
// i.e. the next representable double above the (k+1)-th highest impostor
// score where k is the number of impostors the target allows.
// FNMR = |{genuine < t}| / G. Throws InsufficientPairsError when fewer than
// 1 / target impostors are available, ProtocolError on empty or non-finite
// inputs.
FnmrResult fnmr_at_fmr(const ScoreSet& scores, double target_fmr);

struct GroupMetrics {
  std::map<std::string, double> group_fnmr;
  double avg = 0.0;
  double std = 0.0;  // population standard deviation
  double ser = 1.0;  // max / min
};

// Throws UndefinedMetricError with fewer than two groups or a zero minimum.
GroupMetrics fairness_metrics(const std::map<std::string, double>& group_fnmrs);

// Rounds half away from zero at `decimals` places, treating values within
// 1e-9 of a half step as exact halves (values are printed decimals).
double round_half_up(double value, int decimals);
std::string format_fixed(double value, int decimals);

// --- matchers -------------------------------------------------------------

struct MatchRequest {
  FacePair pair;
  bool flipped = false;  // second view of a flip-test batch
};

class Matcher {
 public:
  virtual ~Matcher() = default;
  // One similarity per request.
  virtual std::vector<double> match(std::span<const MatchRequest> batch) = 0;
};

// Cosine similarity of stored embeddings.
class EmbeddingMatcher final : public Matcher {
 public:
  explicit EmbeddingMatcher(const Corpus& corpus) : corpus_(corpus) {}
  std::vector<double> match(std::span<const MatchRequest> batch) override;

 private:
  const Corpus& corpus_;
};

// Sleeps for a fixed duration per call and returns zeros.
class SleepMatcher final : public Matcher {
 public:
  explicit SleepMatcher(std::chrono::microseconds delay) : delay_(delay) {}
  std::vector<double> match(std::span<const MatchRequest> batch) override;

 private:
  std::chrono::microseconds delay_;
};

// External process: `argv... <pairs_file> <scores_file>`. The pairs file has
// "face_id_a<TAB>face_id_b" lines; the process writes one decimal similarity
// per line. Invocations exceeding the timeout are killed.
class ExternalMatcher final : public Matcher {
 public:
  ExternalMatcher(std::vector<std::string> argv, std::filesystem::path work_dir,
                  std::chrono::milliseconds timeout = std::chrono::minutes(10));
  std::vector<double> match(std::span<const MatchRequest> batch) override;
  void set_timeout(std::chrono::milliseconds timeout) { timeout_ = timeout; }

 private:
  std::vector<std::string> argv_;
  std::filesystem::path work_dir_;
  std::chrono::milliseconds timeout_;
  std::uint64_t calls_ = 0;
};

// Splits a command line on whitespace (no quoting).
std::vector<std::string> split_command(const std::string& command);

// Scores every pair of the protocol through the matcher in batches.
ScoreSet score_protocol(const PairProtocol& protocol, Matcher& matcher,
                        std::size_t batch_size = 4096);

// Embedding-based scoring, parallel over pair blocks.
ScoreSet score_protocol(const PairProtocol& protocol, const Corpus& corpus,
                        std::size_t workers = 1);

// --- latency --------------------------------------------------------------

enum class Track { kFruits100, kFruits500, kFruits1000 };

struct TimeBudget {
  Track track = Track::kFruits100;
  std::size_t warmup_runs = 5;
  std::size_t min_timed_runs = 30;
  bool flip = false;

  double budget_ms() const;
  std::size_t batch_size() const { return flip ? 2 : 1; }
  static TimeBudget for_track(Track track, bool flip = false);
};

std::string_view to_string(Track track);
std::optional<Track> parse_track(std::string_view name);

struct LatencyResult {
  Track track = Track::kFruits100;
  double budget_ms = 0.0;
  double median_ms = 0.0;
  std::vector<double> samples_ms;
  std::size_t batch_size = 1;
  bool pass = false;
};

// Warmup invocations are discarded; then max(min_timed_runs, probe count)
// timed invocations, each on one probe pair (plus its flipped view when
// flip is on), run with the calling thread pinned to a single CPU. Throws
// MatcherError if the matcher fails or an invocation exceeds 10x the budget.
LatencyResult measure_latency(Matcher& matcher, std::span<const FacePair> probe_pairs,
                              const TimeBudget& budget);

}  // namespace castkit::fruits
