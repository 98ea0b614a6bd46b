#include <gtest/gtest.h>

#include <atomic>

#include "castkit/errors.hpp"
#include "castkit/fruits.hpp"

using namespace castkit;
using namespace castkit::fruits;

namespace {

const std::vector<FacePair> kProbe = {{FaceId{1}, FaceId{2}}};

TimeBudget quick(Track track, bool flip = false) {
  auto b = TimeBudget::for_track(track, flip);
  b.warmup_runs = 1;
  b.min_timed_runs = 5;
  return b;
}

class NoOpMatcher final : public Matcher {
 public:
  std::size_t calls = 0;
  std::size_t last_batch = 0;
  bool saw_flip = false;
  std::vector<double> match(std::span<const MatchRequest> batch) override {
    ++calls;
    last_batch = batch.size();
    for (const auto& r : batch) saw_flip |= r.flipped;
    return std::vector<double>(batch.size(), 0.0);
  }
};

class ThrowingMatcher final : public Matcher {
 public:
  std::vector<double> match(std::span<const MatchRequest>) override {
    throw std::runtime_error("segfault in model");
  }
};

}  // namespace

TEST(Tracks, BudgetsAndNames) {
  EXPECT_DOUBLE_EQ(TimeBudget::for_track(Track::kFruits100).budget_ms(), 100.0);
  EXPECT_DOUBLE_EQ(TimeBudget::for_track(Track::kFruits500).budget_ms(), 500.0);
  EXPECT_DOUBLE_EQ(TimeBudget::for_track(Track::kFruits1000).budget_ms(), 1000.0);
  EXPECT_EQ(TimeBudget::for_track(Track::kFruits100, true).batch_size(), 2u);
  EXPECT_EQ(parse_track("FRUITS-500"), Track::kFruits500);
  EXPECT_EQ(to_string(Track::kFruits1000), "FRUITS-1000");
  EXPECT_FALSE(parse_track("FRUITS-42").has_value());
}

TEST(Latency, NoOpMatcherPassesNearZero) {
  NoOpMatcher m;
  const auto r = measure_latency(m, kProbe, quick(Track::kFruits100));
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.median_ms, 1.0);
  EXPECT_EQ(r.samples_ms.size(), 5u);
  EXPECT_EQ(m.calls, 6u);  // 1 warmup + 5 timed
  EXPECT_EQ(m.last_batch, 1u);
}

TEST(Latency, FlipSendsBatchOfTwo) {
  NoOpMatcher m;
  const auto r = measure_latency(m, kProbe, quick(Track::kFruits100, true));
  EXPECT_EQ(m.last_batch, 2u);
  EXPECT_TRUE(m.saw_flip);
  EXPECT_EQ(r.batch_size, 2u);
}

TEST(Latency, UnderBudgetPasses) {
  SleepMatcher m(std::chrono::milliseconds(97));
  const auto r = measure_latency(m, kProbe, quick(Track::kFruits100));
  EXPECT_TRUE(r.pass) << r.median_ms;
  EXPECT_NEAR(r.median_ms, 97.0, 10.0);
}

TEST(Latency, OverBudgetFails) {
  SleepMatcher m(std::chrono::milliseconds(200));
  const auto r = measure_latency(m, kProbe, quick(Track::kFruits100));
  EXPECT_FALSE(r.pass);
}

TEST(Latency, SlowModelFitsLargestTrack) {
  SleepMatcher m(std::chrono::milliseconds(826));
  auto budget = quick(Track::kFruits1000, true);
  budget.warmup_runs = 0;
  budget.min_timed_runs = 3;
  EXPECT_TRUE(measure_latency(m, kProbe, budget).pass);
}

TEST(Latency, MatcherFailureIsReported) {
  ThrowingMatcher m;
  EXPECT_THROW(measure_latency(m, kProbe, quick(Track::kFruits100)), MatcherError);
}

TEST(Latency, RunawayMatcherIsAborted) {
  SleepMatcher m(std::chrono::milliseconds(1100));  // > 10x the 100 ms budget
  auto budget = quick(Track::kFruits100);
  budget.warmup_runs = 0;
  budget.min_timed_runs = 1;
  EXPECT_THROW(measure_latency(m, kProbe, budget), MatcherError);
}
