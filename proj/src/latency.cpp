#include <pthread.h>
#include <sched.h>

#include <algorithm>
#include <chrono>

#include "castkit/errors.hpp"
#include "castkit/fruits.hpp"

namespace castkit::fruits {

double TimeBudget::budget_ms() const {
  switch (track) {
    case Track::kFruits100: return 100.0;
    case Track::kFruits500: return 500.0;
    case Track::kFruits1000: return 1000.0;
  }
  return 100.0;
}

TimeBudget TimeBudget::for_track(Track track, bool flip) {
  TimeBudget b;
  b.track = track;
  b.flip = flip;
  return b;
}

std::string_view to_string(Track track) {
  switch (track) {
    case Track::kFruits100: return "FRUITS-100";
    case Track::kFruits500: return "FRUITS-500";
    case Track::kFruits1000: return "FRUITS-1000";
  }
  return "FRUITS-100";
}

std::optional<Track> parse_track(std::string_view name) {
  if (name == "FRUITS-100") return Track::kFruits100;
  if (name == "FRUITS-500") return Track::kFruits500;
  if (name == "FRUITS-1000") return Track::kFruits1000;
  return std::nullopt;
}

namespace {

// Pins the calling thread to its first allowed CPU for the guard's lifetime.
class SingleCorePin {
 public:
  SingleCorePin() {
    pinned_ = ::pthread_getaffinity_np(::pthread_self(), sizeof original_, &original_) == 0;
    if (!pinned_) return;
    cpu_set_t one;
    CPU_ZERO(&one);
    for (int cpu = 0; cpu < CPU_SETSIZE; ++cpu) {
      if (CPU_ISSET(cpu, &original_)) {
        CPU_SET(cpu, &one);
        break;
      }
    }
    pinned_ = ::pthread_setaffinity_np(::pthread_self(), sizeof one, &one) == 0;
  }
  ~SingleCorePin() {
    if (pinned_) ::pthread_setaffinity_np(::pthread_self(), sizeof original_, &original_);
  }
  SingleCorePin(const SingleCorePin&) = delete;
  SingleCorePin& operator=(const SingleCorePin&) = delete;

 private:
  cpu_set_t original_{};
  bool pinned_ = false;
};

}  // namespace

LatencyResult measure_latency(Matcher& matcher, std::span<const FacePair> probe_pairs,
                              const TimeBudget& budget) {
  if (probe_pairs.empty()) throw MatcherError("latency measurement needs probe pairs");
  LatencyResult result;
  result.track = budget.track;
  result.budget_ms = budget.budget_ms();
  result.batch_size = budget.batch_size();
  const double limit_ms = 10.0 * result.budget_ms;

  auto invoke = [&](std::size_t i) {
    const FacePair& pair = probe_pairs[i % probe_pairs.size()];
    std::vector<MatchRequest> batch{{pair, false}};
    if (budget.flip) batch.push_back({pair, true});
    const auto start = std::chrono::steady_clock::now();
    std::vector<double> scores;
    try {
      scores = matcher.match(batch);
    } catch (const std::exception& e) {
      throw MatcherError(std::string("matcher failed during latency run: ") + e.what());
    }
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    if (scores.size() != batch.size())
      throw MatcherError("matcher returned the wrong number of scores");
    if (ms > limit_ms)
      throw MatcherError("matcher exceeded 10x the " + std::string(to_string(budget.track)) +
                         " budget (" + std::to_string(ms) + " ms)");
    return ms;
  };

  SingleCorePin pin;
  for (std::size_t i = 0; i < budget.warmup_runs; ++i) invoke(i);
  const std::size_t timed = std::max(budget.min_timed_runs, probe_pairs.size());
  result.samples_ms.reserve(timed);
  for (std::size_t i = 0; i < timed; ++i) result.samples_ms.push_back(invoke(i));

  std::vector<double> sorted = result.samples_ms;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  result.median_ms = sorted.size() % 2 == 1 ? sorted[mid]
                                            : 0.5 * (sorted[mid - 1] + sorted[mid]);
  result.pass = result.median_ms <= result.budget_ms;
  return result;
}

}  // namespace castkit::fruits
