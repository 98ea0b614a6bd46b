#include <gtest/gtest.h>

#include <cmath>

#include "castkit/errors.hpp"
#include "castkit/fruits.hpp"
#include "castkit/random.hpp"

using namespace castkit;
using namespace castkit::fruits;

namespace {

void expect_row(std::map<std::string, double> groups, const char* avg, const char* sd,
                const char* ser) {
  const auto m = fairness_metrics(groups);
  EXPECT_EQ(format_fixed(m.avg, 4), avg);
  EXPECT_EQ(format_fixed(m.std, 4), sd);
  EXPECT_EQ(format_fixed(m.ser, 2), ser);
}

}  // namespace

TEST(Fairness, Ms1mv2RaceRow) {
  expect_row({{"Caucasian", 0.1050}, {"EastAsian", 0.1474}, {"African", 0.1053}}, "0.1192",
             "0.0199", "1.40");
}

TEST(Fairness, Ms1mv2GenderRow) {
  expect_row({{"Male", 0.0850}, {"Female", 0.1597}}, "0.1224", "0.0374", "1.88");
}

TEST(Fairness, WebFace4mRaceRow) {
  expect_row({{"Caucasian", 0.0942}, {"EastAsian", 0.1368}, {"African", 0.1071}}, "0.1127",
             "0.0178", "1.45");
}

TEST(Fairness, WebFace4mGenderRow) {
  expect_row({{"Male", 0.0890}, {"Female", 0.1713}}, "0.1302", "0.0412", "1.92");
}

TEST(Fairness, BalancedRows) {
  expect_row({{"Caucasian", 0.0976}, {"EastAsian", 0.1253}, {"African", 0.1025}}, "0.1085",
             "0.0121", "1.28");
  expect_row({{"Male", 0.0825}, {"Female", 0.1332}}, "0.1079", "0.0254", "1.61");
}

TEST(Fairness, EqualErrorsArePerfectlyFair) {
  const auto m = fairness_metrics({{"a", 0.2}, {"b", 0.2}, {"c", 0.2}});
  EXPECT_DOUBLE_EQ(m.std, 0.0);
  EXPECT_DOUBLE_EQ(m.ser, 1.0);
}

TEST(Fairness, StdIsPopulationStd) {
  const auto m = fairness_metrics({{"a", 0.1}, {"b", 0.3}});
  EXPECT_NEAR(m.std, 0.1, 1e-15);
  EXPECT_NEAR(m.avg, 0.2, 1e-15);
}

TEST(Fairness, UndefinedCases) {
  EXPECT_THROW(fairness_metrics({{"a", 0.1}}), UndefinedMetricError);
  EXPECT_THROW(fairness_metrics({{"a", 0.0}, {"b", 0.1}}), UndefinedMetricError);
}

TEST(Rounding, HalfStepsRoundUp) {
  EXPECT_EQ(format_fixed(0.13015, 4), "0.1302");
  EXPECT_EQ(format_fixed(0.12345, 4), "0.1235");
  EXPECT_EQ(format_fixed(1.405, 2), "1.41");
  EXPECT_EQ(format_fixed(0.11924, 4), "0.1192");
  EXPECT_DOUBLE_EQ(round_half_up(-0.125, 2), -0.13);
}

TEST(FnmrAtFmr, PerfectSeparation) {
  ScoreSet s;
  s.genuine_scores.assign(100, 1.0);
  s.impostor_scores.assign(5000, 0.0);
  const auto r = fnmr_at_fmr(s, 1e-3);
  EXPECT_EQ(r.fnmr, 0.0);
  EXPECT_GT(r.threshold, 0.0);
  EXPECT_LE(r.threshold, 1.0);
}

TEST(FnmrAtFmr, ExchangeableScoresGiveOneMinusTarget) {
  Rng rng(1);
  ScoreSet s;
  for (int i = 0; i < 100000; ++i) s.genuine_scores.push_back(rng.normal());
  for (int i = 0; i < 100000; ++i) s.impostor_scores.push_back(rng.normal());
  for (double target : {1e-1, 1e-2, 1e-3}) {
    const auto r = fnmr_at_fmr(s, target);
    EXPECT_NEAR(r.fnmr, 1.0 - target, 0.05) << target;
  }
}

TEST(FnmrAtFmr, ThresholdMeetsTargetAndIsTight) {
  ScoreSet s;
  s.genuine_scores = {0.5, 0.6, 0.7, 0.8};
  s.impostor_scores = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
  // k = 2 impostors allowed: 0.95 and 0.9 pass; 0.8 must not.
  const auto r = fnmr_at_fmr(s, 0.2);
  EXPECT_EQ(r.threshold, std::nextafter(0.8, 2.0));
  EXPECT_DOUBLE_EQ(r.fnmr, 1.0);  // all genuine <= 0.8
  const auto r2 = fnmr_at_fmr(s, 0.3);
  EXPECT_EQ(r2.threshold, std::nextafter(0.7, 2.0));
  EXPECT_DOUBLE_EQ(r2.fnmr, 0.75);
}

TEST(FnmrAtFmr, TiesAtCutoffAreExcluded) {
  ScoreSet s;
  s.genuine_scores = {0.5};
  s.impostor_scores = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
  const auto r = fnmr_at_fmr(s, 0.1);  // one allowed, but all ten tie
  EXPECT_GT(r.threshold, 0.5);
  EXPECT_DOUBLE_EQ(r.fnmr, 1.0);
}

TEST(FnmrAtFmr, MonotoneInTarget) {
  Rng rng(2);
  ScoreSet s;
  for (int i = 0; i < 3000; ++i) s.genuine_scores.push_back(0.5 + 0.2 * rng.normal());
  for (int i = 0; i < 20000; ++i) s.impostor_scores.push_back(0.2 * rng.normal());
  double previous = -1.0;
  for (double target : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double fnmr = fnmr_at_fmr(s, target).fnmr;
    EXPECT_GE(fnmr, previous);
    previous = fnmr;
  }
}

TEST(FnmrAtFmr, InvariantUnderIncreasingAffineMap) {
  Rng rng(3);
  ScoreSet s, t;
  for (int i = 0; i < 500; ++i) {
    const double g = std::round(100 * (0.4 + 0.2 * rng.normal())) / 100;
    s.genuine_scores.push_back(g);
    t.genuine_scores.push_back(2.0 * g + 1.0);
  }
  for (int i = 0; i < 5000; ++i) {
    const double x = std::round(100 * (0.2 * rng.normal())) / 100;
    s.impostor_scores.push_back(x);
    t.impostor_scores.push_back(2.0 * x + 1.0);
  }
  for (double target : {1e-1, 1e-2, 1e-3})
    EXPECT_EQ(fnmr_at_fmr(s, target).fnmr, fnmr_at_fmr(t, target).fnmr);
}

TEST(FnmrAtFmr, RefusesImpossibleTargets) {
  ScoreSet s;
  s.genuine_scores = {1.0};
  s.impostor_scores.assign(999, 0.0);
  EXPECT_THROW(fnmr_at_fmr(s, 1e-3), InsufficientPairsError);
  s.impostor_scores.push_back(0.0);
  EXPECT_NO_THROW(fnmr_at_fmr(s, 1e-3));
}

TEST(FnmrAtFmr, RejectsBadInput) {
  ScoreSet s;
  s.impostor_scores.assign(100, 0.0);
  EXPECT_THROW(fnmr_at_fmr(s, 0.1), ProtocolError);  // no genuine scores
  s.genuine_scores = {NAN};
  EXPECT_THROW(fnmr_at_fmr(s, 0.1), ProtocolError);
  s.genuine_scores = {1.0};
  EXPECT_THROW(fnmr_at_fmr(s, 0.0), ProtocolError);
  EXPECT_THROW(fnmr_at_fmr(s, 1.0), ProtocolError);
}
