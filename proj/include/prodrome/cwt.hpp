#pragma once

// Morlet continuous wavelet transform of an RR series.
//
// The irregularly sampled RR series is linearly interpolated onto a uniform
// grid, the mean is removed, and each scale is convolved with a sampled
// Morlet wavelet through FFTW. Magnitudes are then read back at every beat.
//
// Wavelet normalization: psi_s(t) = (2 / sqrt(2 pi)) (1/s) exp(i w0 t/s)
// exp(-t^2 / 2 s^2). With this choice a sinusoid of amplitude A produces a
// coefficient magnitude of A at its matching scale s = w0 / (2 pi f).

#include <fftw3.h>

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "prodrome/error.hpp"
#include "prodrome/signal.hpp"

namespace prodrome {

struct CwtConfig {
  double f_min = 0.01;  // Hz
  double f_max = 0.15;  // Hz
  std::size_t n_scales = 8;
  double omega0 = 6.0;
  double resample_rate = 4.0;  // Hz
  // Trailing history (s) for the causal per-window transform; 0 selects a
  // single transform over the whole series.
  double history = 0.0;

  void validate() const {
    if (!(history >= 0.0)) fail(ErrorKind::invalid_argument, "history must be >= 0");
    if (!(f_min > 0.0) || !(f_min < f_max) || !(resample_rate > 2.0 * f_max))
      fail(ErrorKind::invalid_argument, "invalid band");
    if (n_scales < 1) fail(ErrorKind::invalid_argument, "n_scales must be >= 1");
    if (!(omega0 >= 5.0)) fail(ErrorKind::invalid_argument, "omega0 must be >= 5");
  }

  /// Ratio between adjacent pseudo-frequencies (1 for a single scale).
  double step_ratio() const {
    if (n_scales < 2) return 1.0;
    return std::pow(f_max / f_min, 1.0 / static_cast<double>(n_scales - 1));
  }
};

/// Log-spaced pseudo-frequencies from f_min to f_max, ascending.
inline std::vector<double> cwt_frequencies(const CwtConfig& cfg) {
  std::vector<double> f(cfg.n_scales);
  if (cfg.n_scales == 1) {
    f[0] = std::sqrt(cfg.f_min * cfg.f_max);
    return f;
  }
  const double r = cfg.step_ratio();
  for (std::size_t i = 0; i < cfg.n_scales; ++i)
    f[i] = cfg.f_min * std::pow(r, static_cast<double>(i));
  f.back() = cfg.f_max;
  return f;
}

/// Scale (seconds) whose Morlet pseudo-frequency is f.
inline double morlet_scale(double frequency, double omega0) {
  return omega0 / (2.0 * std::numbers::pi * frequency);
}

inline double morlet_pseudo_frequency(double scale, double omega0) {
  return omega0 / (2.0 * std::numbers::pi * scale);
}

/// Discrete convolution kernel h[j] (j = lag in samples) such that
/// W[m] = sum_k x[k] h[m - k]. Includes the dt integration weight.
inline std::complex<double> morlet_kernel(long lag, double scale, double omega0,
                                          double dt) {
  const double tau = static_cast<double>(lag) * dt / scale;
  const double env = std::exp(-0.5 * tau * tau);
  const double amp = 2.0 / std::sqrt(2.0 * std::numbers::pi) * dt / scale * env;
  return std::polar(amp, omega0 * tau);
}

/// Complex coefficients on the uniform grid, one row per scale.
using CwtGrid = std::vector<std::vector<std::complex<double>>>;

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// RAII wrapper around an in-place complex FFTW plan.
class FftPlan {
 public:
  FftPlan(std::size_t n, int sign) : n_(n) {
    buf_ = fftw_alloc_complex(n);
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, sign, FFTW_ESTIMATE);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(buf_);
  }

  std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(buf_); }
  void execute() { fftw_execute(plan_); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  fftw_complex* buf_ = nullptr;
  fftw_plan plan_ = nullptr;
};

}  // namespace detail

/// CWT of a uniformly sampled signal (sample interval dt) at the given
/// scales. Linear convolution with the full two-sided kernel, via FFT.
inline CwtGrid cwt_uniform(std::span<const double> signal, double dt,
                           std::span<const double> scales, double omega0) {
  const std::size_t n = signal.size();
  CwtGrid out(scales.size());
  if (n == 0) return out;

  std::size_t p = 1;
  while (p < 2 * n) p <<= 1;
  detail::FftPlan fwd(p, FFTW_FORWARD);
  detail::FftPlan inv(p, FFTW_BACKWARD);

  std::vector<std::complex<double>> x_hat(p);
  std::fill(fwd.data(), fwd.data() + p, std::complex<double>{});
  std::copy(signal.begin(), signal.end(), fwd.data());
  fwd.execute();
  std::copy(fwd.data(), fwd.data() + p, x_hat.begin());

  for (std::size_t s = 0; s < scales.size(); ++s) {
    auto* h = fwd.data();
    std::fill(h, h + p, std::complex<double>{});
    h[0] = morlet_kernel(0, scales[s], omega0, dt);
    for (std::size_t j = 1; j < n; ++j) {
      const auto pos = morlet_kernel(static_cast<long>(j), scales[s], omega0, dt);
      if (std::abs(pos) == 0.0) break;
      h[j] = pos;
      h[p - j] = morlet_kernel(-static_cast<long>(j), scales[s], omega0, dt);
    }
    fwd.execute();
    auto* y = inv.data();
    for (std::size_t k = 0; k < p; ++k) y[k] = x_hat[k] * h[k];
    inv.execute();
    out[s].resize(n);
    const double norm = 1.0 / static_cast<double>(p);
    for (std::size_t m = 0; m < n; ++m) out[s][m] = y[m] * norm;
  }
  return out;
}

/// Uniform resampling of the RR series: rr[i] is placed at beat_times[i+1]
/// and linearly interpolated onto t0 + k / rate for t0 = beat_times[1].
struct ResampledRr {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> values;
};

inline ResampledRr resample_rr(const BeatSeries& beats, double rate) {
  ResampledRr out;
  if (beats.rr.empty()) return out;
  out.dt = 1.0 / rate;
  out.t0 = beats.beat_times[1];
  const double t_end = beats.beat_times.back();
  const auto count = static_cast<std::size_t>(std::floor((t_end - out.t0) * rate)) + 1;
  out.values.resize(count);
  std::size_t seg = 0;  // rr sample index at or before t
  for (std::size_t k = 0; k < count; ++k) {
    const double t = out.t0 + static_cast<double>(k) * out.dt;
    while (seg + 1 < beats.rr.size() && beats.beat_times[seg + 2] <= t) ++seg;
    if (seg + 1 >= beats.rr.size()) {
      out.values[k] = beats.rr.back();
      continue;
    }
    const double ta = beats.beat_times[seg + 1];
    const double tb = beats.beat_times[seg + 2];
    const double a = std::clamp((t - ta) / (tb - ta), 0.0, 1.0);
    out.values[k] = beats.rr[seg] + a * (beats.rr[seg + 1] - beats.rr[seg]);
  }
  return out;
}

/// Per-beat Morlet magnitudes, n_beats x n_scales, columns ordered by
/// ascending pseudo-frequency.
inline Eigen::MatrixXd morlet_cwt(const BeatSeries& beats, const CwtConfig& cfg) {
  cfg.validate();
  if (beats.size() < 32) fail(ErrorKind::data, "insufficient beats");

  auto rr = resample_rr(beats, cfg.resample_rate);
  double mean = 0.0;
  for (double v : rr.values) mean += v;
  mean /= static_cast<double>(rr.values.size());
  for (double& v : rr.values) v -= mean;

  const auto freqs = cwt_frequencies(cfg);
  std::vector<double> scales(freqs.size());
  std::transform(freqs.begin(), freqs.end(), scales.begin(),
                 [&](double f) { return morlet_scale(f, cfg.omega0); });
  const auto coeffs = cwt_uniform(rr.values, rr.dt, scales, cfg.omega0);

  const std::size_t n_grid = rr.values.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(beats.size()),
                      static_cast<Eigen::Index>(cfg.n_scales));
  for (std::size_t b = 0; b < beats.size(); ++b) {
    const double pos = std::clamp((beats.beat_times[b] - rr.t0) / rr.dt, 0.0,
                                  static_cast<double>(n_grid - 1));
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n_grid - 1);
    const double a = pos - static_cast<double>(lo);
    for (std::size_t s = 0; s < cfg.n_scales; ++s) {
      const double m = (1.0 - a) * std::abs(coeffs[s][lo]) + a * std::abs(coeffs[s][hi]);
      out(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(s)) = m;
    }
  }
  return out;
}

}  // namespace prodrome
