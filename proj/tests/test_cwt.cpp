#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "prodrome/cwt.hpp"
#include "prodrome/pipeline.hpp"

using namespace prodrome;

namespace {

// Beats whose RR interval follows 0.4 + a sin(2 pi f t).
BeatSeries modulated_beats(double f, double a, double duration, double phase = 0.0) {
  std::vector<double> t{0.0};
  while (t.back() < duration)
    t.push_back(t.back() + 0.4 + a * std::sin(2.0 * std::numbers::pi * f * t.back() + phase));
  return rr_series(t);
}

// Plain time-domain Morlet transform of a uniform signal at sample m.
std::complex<double> direct_cwt(const std::vector<double>& x, double dt, double scale, double w0, std::size_t m) {
  std::complex<double> acc{};
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double tau = (static_cast<double>(m) - static_cast<double>(k)) * dt / scale;
    const double env = std::exp(-0.5 * tau * tau);
    acc += x[k] * (2.0 / std::sqrt(2.0 * std::numbers::pi)) * (dt / scale) * env *
           std::complex<double>(std::cos(w0 * tau), std::sin(w0 * tau));
  }
  return acc;
}

}  // namespace

TEST(Cwt, FrequenciesSpanBand) {
  CwtConfig cfg;
  const auto f = cwt_frequencies(cfg);
  ASSERT_EQ(f.size(), 8u);
  EXPECT_DOUBLE_EQ(f.front(), 0.01);
  EXPECT_DOUBLE_EQ(f.back(), 0.15);
  for (std::size_t i = 1; i < f.size(); ++i) EXPECT_NEAR(f[i] / f[i - 1], cfg.step_ratio(), 1e-12);
}

TEST(Cwt, ScaleFrequencyInverse) {
  for (double f : {0.01, 0.05, 0.15})
    EXPECT_NEAR(morlet_pseudo_frequency(morlet_scale(f, 6.0), 6.0), f, 1e-15);
}

TEST(Cwt, FftMatchesDirectConvolution) {
  std::vector<double> x(600);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = 0.25 * static_cast<double>(i);
    x[i] = std::sin(2.0 * std::numbers::pi * 0.07 * t) + 0.3 * std::cos(2.0 * std::numbers::pi * 0.021 * t + 1.0);
  }
  const std::vector<double> scales{morlet_scale(0.02, 6.0), morlet_scale(0.07, 6.0), morlet_scale(0.15, 6.0)};
  const auto grid = cwt_uniform(x, 0.25, scales, 6.0);
  for (std::size_t s = 0; s < scales.size(); ++s)
    for (std::size_t m : {0u, 17u, 300u, 599u}) {
      const auto want = direct_cwt(x, 0.25, scales[s], 6.0, m);
      EXPECT_NEAR(std::abs(grid[s][m] - want), 0.0, 1e-9) << "scale " << s << " sample " << m;
    }
}

TEST(Cwt, AmplitudeNormalization) {
  // A centred sinusoid of amplitude A reads close to A at its own scale.
  std::vector<double> x(4000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.02 * std::sin(2.0 * std::numbers::pi * 0.1 * 0.25 * static_cast<double>(i));
  const std::vector<double> scales{morlet_scale(0.1, 6.0)};
  const auto grid = cwt_uniform(x, 0.25, scales, 6.0);
  EXPECT_NEAR(std::abs(grid[0][2000]), 0.02, 0.02 * 0.01);
}

TEST(Cwt, LocalizesModulationFrequency) {
  CwtConfig cfg;
  const auto freqs = cwt_frequencies(cfg);
  for (double f : {0.01, 0.02, 0.05, 0.10, 0.15}) {
    const auto beats = modulated_beats(f, 0.02, 2400.0);
    const auto mags = morlet_cwt(beats, cfg);
    ASSERT_EQ(static_cast<std::size_t>(mags.rows()), beats.size());
    ASSERT_EQ(mags.cols(), 8);
    const Eigen::VectorXd centre = mags.row(mags.rows() / 2);
    Eigen::Index best = 0;
    centre.maxCoeff(&best);
    const double ratio = std::abs(std::log(freqs[static_cast<std::size_t>(best)] / f));
    EXPECT_LE(ratio, std::log(cfg.step_ratio()) + 1e-9) << "f = " << f;
  }
}

TEST(Cwt, ConstantRrIsSilent) {
  std::vector<double> t;
  for (int i = 0; i < 400; ++i) t.push_back(0.5 * i);
  const auto mags = morlet_cwt(rr_series(t), CwtConfig{});
  EXPECT_LE(mags.maxCoeff(), 1e-8 * 0.5);
  EXPECT_GE(mags.minCoeff(), 0.0);
}

TEST(Cwt, BandAcceptedAtFourHertz) {
  CwtConfig cfg;
  cfg.f_min = 0.01;
  cfg.f_max = 0.15;
  cfg.resample_rate = 4.0;
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Cwt, BandAboveNyquistRejected) {
  CwtConfig cfg;
  cfg.f_max = 2.5;
  try {
    cfg.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "invalid band");
  }
  cfg = CwtConfig{};
  cfg.f_min = 0.2;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Cwt, TooFewBeats) {
  std::vector<double> t;
  for (int i = 0; i < 31; ++i) t.push_back(0.5 * i);
  try {
    morlet_cwt(rr_series(t), CwtConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "insufficient beats");
  }
}

TEST(Cwt, ResampleInterpolatesRr) {
  const auto beats = rr_series(std::vector<double>{0.0, 1.0, 3.0, 4.0});
  const auto r = resample_rr(beats, 2.0);
  EXPECT_DOUBLE_EQ(r.t0, 1.0);
  ASSERT_EQ(r.values.size(), 7u);
  EXPECT_DOUBLE_EQ(r.values[0], 1.0);
  EXPECT_DOUBLE_EQ(r.values[2], 1.5);
  EXPECT_DOUBLE_EQ(r.values[4], 2.0);
  EXPECT_DOUBLE_EQ(r.values[6], 1.0);
}

TEST(CausalWindows, MatchTransformOfTrailingHistory) {
  const auto beats = modulated_beats(0.05, 0.02, 900.0);
  CwtConfig cfg;
  cfg.history = 120.0;
  const auto wins = causal_feature_windows(beats, cfg, 64, 64);
  ASSERT_GE(wins.size(), 10u);
  const auto& w = wins[8];
  const auto& bt = beats.beat_times;
  std::size_t from = 0;
  while (bt[from] < bt[w.first_beat] - cfg.history) ++from;
  const std::vector<double> sub(bt.begin() + static_cast<long>(from), bt.begin() + static_cast<long>(w.end_beat()));
  const auto feats = morlet_cwt(rr_series(sub), cfg);
  EXPECT_LE((feats.bottomRows(64) - w.features).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_DOUBLE_EQ(w.end_time, bt[w.end_beat() - 1]);
}

TEST(CausalWindows, IgnoreFutureBeats) {
  const auto full = modulated_beats(0.03, 0.02, 1200.0);
  std::vector<double> cut(full.beat_times.begin(), full.beat_times.begin() + 1000);
  // Append a slowdown that only exists in the future of the prefix.
  auto altered = cut;
  for (int i = 0; i < 200; ++i) altered.push_back(altered.back() + 0.9);
  CwtConfig cfg;
  cfg.history = 300.0;
  const auto a = causal_feature_windows(rr_series(cut), cfg, 64, 64);
  const auto b = causal_feature_windows(rr_series(altered), cfg, 64, 64);
  ASSERT_EQ(a.size(), 15u);
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_EQ((a[i].features - b[i].features).cwiseAbs().maxCoeff(), 0.0) << i;
}

TEST(CausalWindows, GlobalTransformLooksAhead) {
  const auto full = modulated_beats(0.03, 0.02, 1200.0);
  std::vector<double> cut(full.beat_times.begin(), full.beat_times.begin() + 1000);
  auto altered = cut;
  for (int i = 0; i < 200; ++i) altered.push_back(altered.back() + 0.9);
  const auto a = segment_windows(morlet_cwt(rr_series(cut), CwtConfig{}), cut, 64, 64);
  const auto b = segment_windows(morlet_cwt(rr_series(altered), CwtConfig{}), altered, 64, 64);
  EXPECT_GT((a.back().features - b[a.size() - 1].features).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(CausalWindows, HistoryMustBeNonNegative) {
  CwtConfig cfg;
  cfg.history = -1.0;
  EXPECT_THROW(cfg.validate(), Error);
}
