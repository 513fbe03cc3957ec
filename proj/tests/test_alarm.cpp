#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "prodrome/alarm.hpp"

using namespace prodrome;

namespace {

Eigen::VectorXd on_circle(double angle) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(4);
  v(0) = std::cos(angle);
  v(1) = std::sin(angle);
  return v;
}

std::vector<Eigen::VectorXd> blob(double angle, int n) {
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < n; ++i) out.push_back(on_circle(angle + 1e-4 * (i % 3)));
  return out;
}

Assignment in_cluster(std::int64_t macro) {
  Assignment a;
  a.macro_id = macro;
  a.micro_id = static_cast<std::uint64_t>(macro);
  return a;
}

// Verdict strings: 'A' abnormal, 'N' normal.
std::vector<bool> fires(const std::string& verdicts, std::size_t k, double threshold = 0.5) {
  ConfidenceWindow cw(k, threshold);
  std::vector<bool> out;
  for (char c : verdicts) out.push_back(cw.push(c == 'A'));
  return out;
}

}  // namespace

TEST(Calibrate, SingleBlob) {
  const auto cal = calibrate(blob(0.0, 10), ClusterParams{});
  EXPECT_EQ(cal.normal.ids.size(), 1u);
  EXPECT_EQ(cal.normal.training_windows, 10u);
}

TEST(Calibrate, TwoBlobs) {
  auto reps = blob(0.0, 10);
  for (auto& v : blob(1.0, 10)) reps.push_back(v);
  const auto cal = calibrate(reps, ClusterParams{});
  EXPECT_EQ(cal.normal.ids.size(), 2u);
}

TEST(Calibrate, TooFewPoints) {
  try {
    calibrate(blob(0.0, 1), ClusterParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "calibration failed: no dense normal region");
  }
}

TEST(Calibrate, ScatteredPointsFormNothing) {
  std::vector<Eigen::VectorXd> reps;
  for (int i = 0; i < 10; ++i) reps.push_back(on_circle(0.3 * i));
  EXPECT_THROW(calibrate(reps, ClusterParams{}), Error);
}

TEST(Calibrate, KeepsStateForDetection) {
  const auto reps = blob(0.0, 6);
  std::vector<double> times{1, 2, 3, 4, 5, 6};
  const auto cal = calibrate(reps, times, ClusterParams{});
  EXPECT_DOUBLE_EQ(cal.normal.calibrated_at, 6.0);
  EXPECT_DOUBLE_EQ(cal.state.last_time(), 6.0);
  auto state = cal.state;
  const auto a = state.insert(on_circle(0.0), 7.0);
  EXPECT_TRUE(cal.normal.contains(a.macro_id));
}

TEST(Verdict, OutliersCountAsNormal) {
  NormalClusterSet c;
  c.ids = {0};
  EXPECT_FALSE(is_abnormal(Assignment{}, c));
  EXPECT_FALSE(is_abnormal(in_cluster(0), c));
  EXPECT_TRUE(is_abnormal(in_cluster(4), c));
}

TEST(ConfidenceWindow, ThreeOfFiveFires) {
  // During warm-up N,N,A,A already reads 2 of 4.
  const auto f = fires("NNAAA", 5);
  EXPECT_EQ(f, (std::vector<bool>{false, false, false, true, false}));
  EXPECT_EQ(fires("NNNNNNNAAA", 5).back(), true);
  ConfidenceWindow cw(5);
  for (char c : std::string("NNAAA")) cw.push(c == 'A');
  EXPECT_DOUBLE_EQ(cw.score(), 0.6);
}

TEST(ConfidenceWindow, AllNormalNeverFires) {
  for (bool b : fires(std::string(100, 'N'), 5)) EXPECT_FALSE(b);
}

TEST(ConfidenceWindow, HysteresisNeedsDip) {
  const auto f = fires("NNAAAAAAAA", 5);
  EXPECT_EQ(std::count(f.begin(), f.end(), true), 1);
  // Dip below threshold re-arms.
  const auto g = fires("NNAAANNNNNAAA", 5);
  EXPECT_EQ(std::count(g.begin(), g.end(), true), 2);
}

TEST(ConfidenceWindow, WarmUpUsesObservedCount) {
  ConfidenceWindow cw(5);
  EXPECT_DOUBLE_EQ(cw.score(), 0.0);
  EXPECT_TRUE(cw.push(true));  // 1 of 1
  EXPECT_DOUBLE_EQ(cw.score(), 1.0);
  cw.push(false);
  EXPECT_DOUBLE_EQ(cw.score(), 0.5);
}

TEST(ConfidenceWindow, Reset) {
  ConfidenceWindow cw(3);
  cw.push(true);
  cw.push(true);
  cw.reset();
  EXPECT_EQ(cw.size(), 0u);
  EXPECT_TRUE(cw.armed());
  cw.reset();
  EXPECT_EQ(cw.size(), 0u);
  cw.push(false);
  EXPECT_DOUBLE_EQ(cw.score(), 0.0);
}

TEST(ConfidenceWindow, InvalidParameters) {
  EXPECT_THROW(ConfidenceWindow(0), Error);
  EXPECT_THROW(ConfidenceWindow(5, 0.0), Error);
  EXPECT_THROW(ConfidenceWindow(5, 1.5), Error);
}

TEST(ConfidenceWindow, ObserveEmitsEvent) {
  NormalClusterSet c;
  c.ids = {0};
  ConfidenceWindow cw(1);
  EXPECT_FALSE(cw.observe(in_cluster(0), c, 10.0));
  auto a = in_cluster(3);
  a.window_id = 42;
  const auto ev = cw.observe(a, c, 20.0);
  ASSERT_TRUE(ev);
  EXPECT_DOUBLE_EQ(ev->time, 20.0);
  EXPECT_DOUBLE_EQ(ev->score, 1.0);
  EXPECT_EQ(ev->window_id, 42u);
}

// Brute force over every verdict string up to length 10 for k <= 8: the
// score equals the abnormal fraction of the trailing min(k, n) verdicts, an
// alarm fires iff that fraction reaches the threshold and the previous
// observation did not, and the k = 5 alarm needs at least 3 abnormal.
TEST(ConfidenceWindow, ExhaustiveAgainstBruteForce) {
  for (std::size_t k = 1; k <= 8; ++k) {
    for (std::size_t n = 1; n <= 10; ++n) {
      for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
        ConfidenceWindow cw(k, 0.5);
        bool prev_over = false;
        for (std::size_t i = 0; i < n; ++i) {
          const bool abn = (bits >> i) & 1u;
          const bool fired = cw.push(abn);
          const std::size_t lo = i + 1 > k ? i + 1 - k : 0;
          std::size_t count = 0;
          for (std::size_t j = lo; j <= i; ++j) count += (bits >> j) & 1u;
          const std::size_t m = i + 1 - lo;
          const double want = static_cast<double>(count) / static_cast<double>(m);
          ASSERT_DOUBLE_EQ(cw.score(), want);
          const bool over = 2 * count >= m;
          ASSERT_EQ(fired, over && !prev_over) << "k " << k << " bits " << bits << " i " << i;
          if (k == 5 && m == 5 && fired) {
            ASSERT_GE(count, 3u);
          }
          prev_over = over;
        }
      }
    }
  }
}

TEST(ConfidenceWindow, FlippingToAbnormalNeverLowersScore) {
  for (std::uint32_t bits = 0; bits < (1u << 8); ++bits)
    for (std::size_t flip = 0; flip < 8; ++flip) {
      if ((bits >> flip) & 1u) continue;
      const std::uint32_t more = bits | (1u << flip);
      ConfidenceWindow a(5), b(5);
      for (std::size_t i = 0; i < 8; ++i) {
        a.push((bits >> i) & 1u);
        b.push((more >> i) & 1u);
        ASSERT_GE(b.score(), a.score());
      }
    }
}
