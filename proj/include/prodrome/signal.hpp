#pragma once

// ECG ingestion helpers: R-peak detection, RR (heart-rate variability)
// series and the heart-rate threshold rule used to mark bradycardia onsets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "prodrome/error.hpp"

namespace prodrome {

struct EcgSeries {
  double sample_rate = 0.0;  // Hz
  std::vector<double> samples;  // mV
  double start_time = 0.0;  // s

  double time_of(std::size_t i) const {
    return start_time + static_cast<double>(i) / sample_rate;
  }
  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Beat timestamps plus the RR intervals between consecutive beats.
/// rr[i] = beat_times[i + 1] - beat_times[i].
struct BeatSeries {
  std::vector<double> beat_times;
  std::vector<double> rr;

  std::size_t size() const { return beat_times.size(); }
  bool empty() const { return beat_times.empty(); }
};

inline BeatSeries rr_series(std::span<const double> beat_times) {
  BeatSeries out;
  out.beat_times.assign(beat_times.begin(), beat_times.end());
  if (beat_times.size() < 2) return out;
  out.rr.reserve(beat_times.size() - 1);
  for (std::size_t i = 0; i + 1 < beat_times.size(); ++i) {
    const double d = beat_times[i + 1] - beat_times[i];
    if (!(d > 0.0)) fail(ErrorKind::data, "non-monotone beats");
    out.rr.push_back(d);
  }
  return out;
}

namespace detail {

// Second-order section, direct form I.
struct Biquad {
  double b0, b1, b2, a1, a2;

  std::vector<double> run(std::span<const double> x) const {
    std::vector<double> y(x.size());
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (std::size_t n = 0; n < x.size(); ++n) {
      const double v = b0 * x[n] + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = x[n];
      y2 = y1;
      y1 = v;
      y[n] = v;
    }
    return y;
  }

  // Zero-phase forward/backward pass.
  std::vector<double> filtfilt(std::span<const double> x) const {
    auto y = run(x);
    std::reverse(y.begin(), y.end());
    y = run(y);
    std::reverse(y.begin(), y.end());
    return y;
  }
};

// Butterworth (Q = 1/sqrt 2) sections via the bilinear transform.
inline Biquad butter_lowpass(double cutoff, double fs) {
  const double w0 = 2.0 * std::numbers::pi * cutoff / fs;
  const double alpha = std::sin(w0) / (2.0 * std::numbers::sqrt2 / 2.0);
  const double cw = std::cos(w0);
  const double a0 = 1.0 + alpha;
  return {(1.0 - cw) / 2.0 / a0, (1.0 - cw) / a0, (1.0 - cw) / 2.0 / a0,
          -2.0 * cw / a0, (1.0 - alpha) / a0};
}

inline Biquad butter_highpass(double cutoff, double fs) {
  const double w0 = 2.0 * std::numbers::pi * cutoff / fs;
  const double alpha = std::sin(w0) / (2.0 * std::numbers::sqrt2 / 2.0);
  const double cw = std::cos(w0);
  const double a0 = 1.0 + alpha;
  return {(1.0 + cw) / 2.0 / a0, -(1.0 + cw) / a0, (1.0 + cw) / 2.0 / a0,
          -2.0 * cw / a0, (1.0 - alpha) / a0};
}

// Centered moving average of odd width.
inline std::vector<double> moving_average(std::span<const double> x,
                                          std::size_t width) {
  const std::size_t half = width / 2;
  std::vector<double> prefix(x.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(x.size(), i + half + 1);
    y[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(width);
  }
  return y;
}

}  // namespace detail

struct RPeakConfig {
  double band_low = 5.0;        // Hz
  double band_high = 25.0;      // Hz
  double integration_window = 0.150;  // s
  double refractory = 0.200;    // s
  double learning_period = 2.0; // s
};

/// Pan-Tompkins style QRS detector: band-pass, derivative, squaring,
/// moving-window integration and a dual adaptive threshold with search-back.
/// Fiducial points are refined to the band-passed maximum near each
/// integrated-energy peak.
inline BeatSeries detect_r_peaks(const EcgSeries& ecg,
                                 const RPeakConfig& cfg = {}) {
  if (!(ecg.sample_rate >= 100.0))
    fail(ErrorKind::invalid_argument, "sample rate below 100 Hz");
  if (ecg.samples.empty() || ecg.duration() < 2.0)
    fail(ErrorKind::data, "insufficient signal");

  const double fs = ecg.sample_rate;
  const auto [mn, mx] = std::minmax_element(ecg.samples.begin(), ecg.samples.end());
  if (*mx - *mn <= 0.0) return {};

  const double mean = std::accumulate(ecg.samples.begin(), ecg.samples.end(), 0.0) /
                      static_cast<double>(ecg.samples.size());
  std::vector<double> x(ecg.samples.size());
  std::transform(ecg.samples.begin(), ecg.samples.end(), x.begin(),
                 [mean](double v) { return v - mean; });

  auto band = detail::butter_lowpass(cfg.band_high, fs).filtfilt(x);
  band = detail::butter_highpass(cfg.band_low, fs).filtfilt(band);

  const std::size_t n = band.size();
  std::vector<double> energy(n, 0.0);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double d = (2.0 * band[i + 2] + band[i + 1] - band[i - 1] - 2.0 * band[i - 2]) * fs / 8.0;
    energy[i] = d * d;
  }
  std::size_t width = static_cast<std::size_t>(std::lround(cfg.integration_window * fs));
  if (width % 2 == 0) ++width;
  const auto mwi = detail::moving_average(energy, width);

  const double peak_level = *std::max_element(mwi.begin(), mwi.end());
  if (!(peak_level > 0.0)) return {};

  // Candidate fiducial marks: local maxima, at most one per refractory span.
  const auto refractory = static_cast<std::size_t>(std::lround(cfg.refractory * fs));
  std::vector<std::size_t> cand;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1])) continue;
    if (!cand.empty() && i - cand.back() < refractory) {
      if (mwi[i] > mwi[cand.back()]) cand.back() = i;
      continue;
    }
    cand.push_back(i);
  }

  const auto learn_end = std::min<std::size_t>(n, static_cast<std::size_t>(cfg.learning_period * fs));
  const double learn_max = *std::max_element(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn_end));
  const double learn_mean = std::accumulate(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn_end), 0.0) /
                            static_cast<double>(learn_end);
  double spki = learn_max / 3.0;
  double npki = learn_mean / 2.0;
  auto threshold = [&] { return npki + 0.25 * (spki - npki); };

  std::vector<std::size_t> qrs;
  std::vector<std::size_t> noise_since_last;
  auto mean_rr = [&]() -> double {
    if (qrs.size() < 2) return 0.0;
    const std::size_t m = std::min<std::size_t>(8, qrs.size() - 1);
    return static_cast<double>(qrs.back() - qrs[qrs.size() - 1 - m]) / static_cast<double>(m);
  };

  for (std::size_t c : cand) {
    // Search-back for a missed beat using half the threshold.
    const double rr_avg = mean_rr();
    if (rr_avg > 0.0 && static_cast<double>(c - qrs.back()) > 1.66 * rr_avg) {
      std::size_t best = n;
      for (std::size_t p : noise_since_last) {
        if (mwi[p] > 0.5 * threshold() && p - qrs.back() >= refractory &&
            c - p >= refractory && (best == n || mwi[p] > mwi[best]))
          best = p;
      }
      if (best != n) {
        qrs.push_back(best);
        spki = 0.25 * mwi[best] + 0.75 * spki;
      }
      noise_since_last.clear();
    }

    const bool clear_of_last = qrs.empty() || c - qrs.back() >= refractory;
    if (mwi[c] > threshold() && clear_of_last) {
      qrs.push_back(c);
      spki = 0.125 * mwi[c] + 0.875 * spki;
      noise_since_last.clear();
    } else {
      npki = 0.125 * mwi[c] + 0.875 * npki;
      noise_since_last.push_back(c);
    }
  }

  // Refine each mark to the band-passed maximum within half a refractory span.
  const std::size_t reach = refractory / 2;
  std::vector<double> times;
  times.reserve(qrs.size());
  std::size_t last_idx = 0;
  for (std::size_t q : qrs) {
    const std::size_t lo = q >= reach ? q - reach : 0;
    const std::size_t hi = std::min(n, q + reach + 1);
    const auto it = std::max_element(band.begin() + static_cast<std::ptrdiff_t>(lo),
                                     band.begin() + static_cast<std::ptrdiff_t>(hi));
    const auto idx = static_cast<std::size_t>(it - band.begin());
    if (!times.empty() && idx < last_idx + refractory) continue;
    times.push_back(ecg.time_of(idx));
    last_idx = idx;
  }
  return rr_series(times);
}

/// Onset time of each maximal run of at least `min_beats` consecutive beats
/// whose instantaneous heart rate 60 / rr is below `hr_threshold` bpm.
/// The rate computed from rr[i] belongs to the beat that closes the interval,
/// beat_times[i + 1].
inline std::vector<double> derive_bradycardia_onsets(const BeatSeries& beats,
                                                     double hr_threshold = 100.0,
                                                     std::size_t min_beats = 2) {
  std::vector<double> onsets;
  std::size_t run = 0;
  std::size_t run_start = 0;
  auto close_run = [&] {
    if (run >= min_beats && run > 0) onsets.push_back(beats.beat_times[run_start + 1]);
    run = 0;
  };
  for (std::size_t i = 0; i < beats.rr.size(); ++i) {
    const bool slow = 60.0 / beats.rr[i] < hr_threshold;
    if (slow) {
      if (run == 0) run_start = i;
      ++run;
    } else {
      close_run();
    }
  }
  close_run();
  return onsets;
}

}  // namespace prodrome
