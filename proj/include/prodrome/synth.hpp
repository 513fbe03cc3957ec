#pragma once

// Synthetic heart-beat streams with injected bradycardia events and
// controllable pre-event changes, plus a template ECG generator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "prodrome/error.hpp"
#include "prodrome/signal.hpp"

namespace prodrome {

enum class DriftKind { spectral_shift, variance_ramp, spike };

inline const char* to_string(DriftKind k) {
  switch (k) {
    case DriftKind::spectral_shift: return "spectral_shift";
    case DriftKind::variance_ramp: return "variance_ramp";
    case DriftKind::spike: return "spike";
  }
  return "?";
}

inline DriftKind parse_drift_kind(const std::string& s) {
  if (s == "spectral_shift") return DriftKind::spectral_shift;
  if (s == "variance_ramp") return DriftKind::variance_ramp;
  if (s == "spike") return DriftKind::spike;
  fail(ErrorKind::config, "unknown drift kind: " + s);
}

struct Oscillation {
  double frequency;  // Hz
  double amplitude;  // s of RR
};

/// One normal behaviour: heart-rate offset from base_hr plus RR oscillations.
struct Regime {
  double hr_shift = 0.0;  // bpm
  std::vector<Oscillation> modulation;
};

struct SynthSpec {
  double duration = 6.0 * 3600.0;  // s
  double lead_in = 0.0;            // event-free prefix, s
  double base_hr = 150.0;          // bpm
  // Normal behaviour alternates between regimes (e.g. quiet and active
  // sleep), each with respiratory modulation plus one slow oscillation.
  std::vector<Regime> regimes{
      {0.0, {{0.5, 0.006}, {0.03, 0.015}}},
      {-10.0, {{0.5, 0.010}, {0.07, 0.015}}},
  };
  double regime_dwell = 1800.0;    // mean seconds per regime visit
  double noise = 0.0003;           // std of the AR(1) RR noise, s
  double noise_corr = 0.9;         // per-beat AR(1) coefficient
  std::size_t event_count = 20;
  double event_hr = 80.0;          // bpm reached during an event
  double event_duration = 12.0;    // s below threshold
  DriftKind drift = DriftKind::spectral_shift;
  double drift_lead = 120.0;       // s before onset
  double drift_magnitude = 0.03;   // s of RR
  double drift_frequency = 0.12;   // Hz, for spectral_shift
  double min_separation = 540.0;   // pre-event span + post-event exclusion
  std::uint64_t seed = 1;

  void validate() const {
    if (regimes.empty()) fail(ErrorKind::config, "synth: at least one regime is required");
    if (!(regime_dwell > 0.0)) fail(ErrorKind::config, "synth: regime_dwell must be > 0");
    for (const auto& r : regimes)
      if (!(base_hr + r.hr_shift > 0.0)) fail(ErrorKind::config, "synth: regime heart rate must be positive");
    if (!(duration > 0.0) || !(base_hr > 0.0) || !(event_hr > 0.0))
      fail(ErrorKind::config, "synth: duration and rates must be positive");
    if (!(lead_in >= 0.0) || lead_in >= duration) fail(ErrorKind::config, "synth: lead_in out of range");
    if (!(noise >= 0.0) || !(noise_corr >= 0.0 && noise_corr < 1.0))
      fail(ErrorKind::config, "synth: invalid noise parameters");
    if (!(drift_lead >= 0.0) || drift_lead > 180.0)
      fail(ErrorKind::config, "synth: drift lead must not exceed the pre-event span");
    if (event_count > 0) {
      const double spacing = (duration - lead_in) / static_cast<double>(event_count);
      if (!(spacing > min_separation))
        fail(ErrorKind::config, "synth: events must be separated by more than the evaluation margins");
    }
  }
};

struct SynthData {
  BeatSeries beats;
  std::vector<double> onsets;
  std::vector<std::pair<double, double>> drift_intervals;  // [start, onset)
};

/// Deterministic per seed. Events sit at jittered slot centres after lead_in.
inline SynthData generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  SynthData out;
  const double slot = spec.event_count ? (spec.duration - spec.lead_in) / static_cast<double>(spec.event_count) : 0.0;
  for (std::size_t e = 0; e < spec.event_count; ++e) {
    const double centre = spec.lead_in + (static_cast<double>(e) + 0.5) * slot;
    const double jitter = (unif(rng) - 0.5) * 0.5 * (slot - spec.min_separation);
    out.onsets.push_back(centre + jitter);
  }
  for (double on : out.onsets) out.drift_intervals.emplace_back(on - spec.drift_lead, on);

  // Regime schedule: dwell times uniform in [0.5, 1.5] x regime_dwell.
  std::vector<std::pair<double, std::size_t>> schedule;  // (start, regime)
  {
    double ts = 0.0;
    std::size_t r = static_cast<std::size_t>(unif(rng) * static_cast<double>(spec.regimes.size())) % spec.regimes.size();
    while (ts < spec.duration + 600.0) {
      schedule.emplace_back(ts, r);
      ts += spec.regime_dwell * (0.5 + unif(rng));
      if (spec.regimes.size() > 1) r = (r + 1 + static_cast<std::size_t>(unif(rng) * static_cast<double>(spec.regimes.size() - 1))) % spec.regimes.size();
    }
  }
  std::vector<std::vector<double>> phase(spec.regimes.size());
  for (std::size_t r = 0; r < spec.regimes.size(); ++r) {
    phase[r].resize(spec.regimes[r].modulation.size());
    for (double& p : phase[r]) p = 2.0 * std::numbers::pi * unif(rng);
  }
  std::size_t sched = 0;

  const double base_rr = 60.0 / spec.base_hr;
  const double event_rr = 60.0 / spec.event_hr;
  double ar = 0.0;
  const double innov = spec.noise * std::sqrt(1.0 - spec.noise_corr * spec.noise_corr);
  double t = 0.0;
  std::size_t next_event = 0;
  std::vector<double>& times = out.beats.beat_times;
  times.push_back(t);

  while (t < spec.duration) {
    ar = spec.noise_corr * ar + innov * gauss(rng);
    while (sched + 1 < schedule.size() && schedule[sched + 1].first <= t) ++sched;
    const std::size_t regime = schedule[sched].second;
    double rr = 60.0 / (spec.base_hr + spec.regimes[regime].hr_shift) + ar;
    for (std::size_t k = 0; k < spec.regimes[regime].modulation.size(); ++k) {
      const auto& osc = spec.regimes[regime].modulation[k];
      rr += osc.amplitude * std::sin(2.0 * std::numbers::pi * osc.frequency * t + phase[regime][k]);
    }

    while (next_event < out.onsets.size() && t >= out.onsets[next_event] + spec.event_duration + 30.0)
      ++next_event;
    if (next_event < out.onsets.size()) {
      const double on = out.onsets[next_event];
      const double into = t - (on - spec.drift_lead);
      if (into >= 0.0 && t < on && spec.drift_lead > 0.0) {
        const double progress = std::min(1.0, into / spec.drift_lead);
        switch (spec.drift) {
          case DriftKind::spectral_shift:
            rr += spec.drift_magnitude * std::sin(2.0 * std::numbers::pi * spec.drift_frequency * into);
            break;
          case DriftKind::variance_ramp:
            rr += ar * (spec.drift_magnitude / std::max(spec.noise, 1e-9)) * progress;
            break;
          case DriftKind::spike:
            // Isolated long beats, roughly one every 4 s.
            if (unif(rng) < base_rr / 4.0) rr += spec.drift_magnitude;
            break;
        }
      }
      // Bradycardia episode: dip to event_rr and hold, then recover.
      if (t >= on && t < on + spec.event_duration) rr = std::max(rr, event_rr);
    }
    rr = std::max(rr, 0.2);
    t += rr;
    times.push_back(t);
  }
  out.beats = rr_series(times);
  return out;
}

/// Gaussian-bump QRS template at the given beat times, plus white noise at
/// the requested SNR (dB, relative to mean template power).
inline EcgSeries synthetic_ecg(std::span<const double> beat_times, double duration, double sample_rate,
                               double snr_db, std::uint64_t seed, double width = 0.010,
                               double amplitude = 1.0) {
  EcgSeries ecg;
  ecg.sample_rate = sample_rate;
  ecg.samples.assign(static_cast<std::size_t>(std::llround(duration * sample_rate)), 0.0);
  for (double bt : beat_times) {
    const auto centre = bt * sample_rate;
    const auto reach = static_cast<long>(std::ceil(6.0 * width * sample_rate));
    const long c = std::lround(centre);
    for (long i = c - reach; i <= c + reach; ++i) {
      if (i < 0 || i >= static_cast<long>(ecg.samples.size())) continue;
      const double d = (static_cast<double>(i) - centre) / sample_rate / width;
      ecg.samples[static_cast<std::size_t>(i)] += amplitude * std::exp(-0.5 * d * d);
    }
  }
  if (std::isfinite(snr_db) && !ecg.samples.empty()) {
    double power = 0.0;
    for (double v : ecg.samples) power += v * v;
    power /= static_cast<double>(ecg.samples.size());
    const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    for (double& v : ecg.samples) v += gauss(rng);
  }
  return ecg;
}

}  // namespace prodrome
