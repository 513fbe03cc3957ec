#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "prodrome/signal.hpp"
#include "prodrome/synth.hpp"

using namespace prodrome;

TEST(RrSeries, UniformSpacing) {
  const std::vector<double> t{0, 1, 2, 3};
  const auto b = rr_series(t);
  EXPECT_EQ(b.rr, (std::vector<double>{1, 1, 1}));
}

TEST(RrSeries, DirectDifferences) {
  const std::vector<double> t{0.0, 0.4, 1.0};
  const auto b = rr_series(t);
  ASSERT_EQ(b.rr.size(), 2u);
  EXPECT_DOUBLE_EQ(b.rr[0], 0.4);
  EXPECT_DOUBLE_EQ(b.rr[1], 0.6);
}

TEST(RrSeries, ConstantHundredBpm) {
  std::vector<double> t;
  for (int i = 0; i < 20; ++i) t.push_back(0.6 * i);
  for (double r : rr_series(t).rr) EXPECT_NEAR(r, 0.6, 1e-12);
}

TEST(RrSeries, NonMonotoneRejected) {
  const std::vector<double> t{0.0, 0.5, 0.5, 1.0};
  try {
    rr_series(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "non-monotone beats");
    EXPECT_EQ(e.kind(), ErrorKind::data);
  }
}

namespace {

BeatSeries from_rr(const std::vector<double>& rr) {
  std::vector<double> t{0.0};
  for (double r : rr) t.push_back(t.back() + r);
  return rr_series(t);
}

}  // namespace

TEST(Bradycardia, OneRunOfTwoSlowBeats) {
  const auto b = from_rr({0.5, 0.5, 0.7, 0.7, 0.5});
  const auto on = derive_bradycardia_onsets(b);
  ASSERT_EQ(on.size(), 1u);
  // The first 0.7 s interval closes at beat 3.
  EXPECT_DOUBLE_EQ(on[0], b.beat_times[3]);
}

TEST(Bradycardia, NeverBelowThreshold) {
  EXPECT_TRUE(derive_bradycardia_onsets(from_rr(std::vector<double>(30, 0.5))).empty());
}

TEST(Bradycardia, IsolatedSlowBeatIgnored) {
  EXPECT_TRUE(derive_bradycardia_onsets(from_rr({0.5, 0.5, 0.8, 0.5, 0.5})).empty());
}

TEST(Bradycardia, SeparatedRunsAreDistinct) {
  const auto b = from_rr({0.5, 0.7, 0.7, 0.5, 0.7, 0.7, 0.7, 0.5});
  const auto on = derive_bradycardia_onsets(b);
  ASSERT_EQ(on.size(), 2u);
  EXPECT_DOUBLE_EQ(on[0], b.beat_times[2]);
  EXPECT_DOUBLE_EQ(on[1], b.beat_times[5]);
}

TEST(Bradycardia, EmptyInput) {
  EXPECT_TRUE(derive_bradycardia_onsets(BeatSeries{}).empty());
}

TEST(RPeaks, TemplateTrainAtTwentyDb) {
  std::vector<double> truth;
  for (double t = 0.5; t < 60.0; t += 0.5) truth.push_back(t);
  const auto ecg = synthetic_ecg(truth, 60.5, 250.0, 20.0, 11);
  const auto found = detect_r_peaks(ecg).beat_times;

  std::size_t matched = 0;
  std::size_t j = 0;
  for (double t : truth) {
    while (j < found.size() && found[j] < t - 0.040) ++j;
    if (j < found.size() && std::abs(found[j] - t) <= 0.040) {
      ++matched;
      ++j;
    }
  }
  const double sensitivity = static_cast<double>(matched) / static_cast<double>(truth.size());
  const double ppv = static_cast<double>(matched) / static_cast<double>(found.size());
  EXPECT_GE(sensitivity, 0.99);
  EXPECT_GE(ppv, 0.99);
  for (std::size_t i = 1; i < found.size(); ++i) EXPECT_GE(found[i] - found[i - 1], 0.2);
}

TEST(RPeaks, VariableRateWithinTolerance) {
  auto data = generate_synthetic([] {
    SynthSpec s;
    s.duration = 300;
    s.event_count = 0;
    return s;
  }());
  const auto& truth = data.beats.beat_times;
  const auto ecg = synthetic_ecg(truth, truth.back() + 1.0, 500.0, 20.0, 3);
  const auto found = detect_r_peaks(ecg).beat_times;
  std::size_t matched = 0, j = 0;
  for (double t : truth) {
    while (j < found.size() && found[j] < t - 0.040) ++j;
    if (j < found.size() && std::abs(found[j] - t) <= 0.040) {
      ++matched;
      ++j;
    }
  }
  EXPECT_GE(static_cast<double>(matched) / static_cast<double>(truth.size()), 0.99);
  EXPECT_GE(static_cast<double>(matched) / static_cast<double>(found.size()), 0.99);
}

TEST(RPeaks, FlatSignalHasNoBeats) {
  EcgSeries ecg;
  ecg.sample_rate = 250.0;
  ecg.samples.assign(2500, 0.0);
  EXPECT_TRUE(detect_r_peaks(ecg).beat_times.empty());
}

TEST(RPeaks, TwoPulses) {
  const std::vector<double> truth{1.0, 1.5};
  const auto ecg = synthetic_ecg(truth, 3.0, 250.0, INFINITY, 0);
  const auto b = detect_r_peaks(ecg);
  ASSERT_EQ(b.beat_times.size(), 2u);
  ASSERT_EQ(b.rr.size(), 1u);
  EXPECT_NEAR(b.rr[0], 0.5, 0.008);
}

TEST(RPeaks, ShortSignalRejected) {
  EcgSeries ecg;
  ecg.sample_rate = 250.0;
  ecg.samples.assign(400, 0.0);
  try {
    detect_r_peaks(ecg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "insufficient signal");
  }
}

TEST(RPeaks, LowSampleRateRejected) {
  EcgSeries ecg;
  ecg.sample_rate = 50.0;
  ecg.samples.assign(1000, 0.0);
  EXPECT_THROW(detect_r_peaks(ecg), Error);
}
