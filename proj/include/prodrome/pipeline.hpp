#pragma once

// End-to-end flow: beats -> CWT features -> windows -> auto-encoder ->
// online clustering -> confidence-window alarms.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "prodrome/alarm.hpp"
#include "prodrome/autoencoder.hpp"
#include "prodrome/cwt.hpp"
#include "prodrome/denstream.hpp"
#include "prodrome/error.hpp"
#include "prodrome/eval.hpp"
#include "prodrome/signal.hpp"
#include "prodrome/training.hpp"
#include "prodrome/windows.hpp"

namespace prodrome {

struct PipelineConfig {
  std::size_t window_len = 64;
  std::size_t stride = 64;
  CwtConfig cwt;
  std::size_t d_hidden = 32;
  TrainConfig train;
  ClusterParams cluster;
  std::size_t k = 5;
  double threshold = 0.5;
  EvalConfig eval;
  double hr_threshold = 100.0;
  std::size_t brady_min_beats = 2;

  void validate() const {
    if (window_len < 2) fail(ErrorKind::config, "window_len must be >= 2");
    if (stride < 1) fail(ErrorKind::config, "stride must be >= 1");
    if (d_hidden < 1) fail(ErrorKind::config, "d_hidden must be >= 1");
    if (k < 1) fail(ErrorKind::config, "k must be >= 1");
    if (!(threshold > 0.0 && threshold <= 1.0)) fail(ErrorKind::config, "threshold must be in (0, 1]");
    if (!(hr_threshold > 0.0)) fail(ErrorKind::config, "hr_threshold must be > 0");
    try {
      cwt.validate();
    } catch (const Error& e) {
      fail(ErrorKind::config, e.what());
    }
    train.validate();
    cluster.validate();
    eval.validate();
  }
};

/// Time separating the training prefix from the evaluation span.
inline double training_boundary(const BeatSeries& beats, double train_fraction) {
  if (beats.empty()) fail(ErrorKind::data, "empty beat series");
  const double t0 = beats.beat_times.front();
  return t0 + train_fraction * (beats.beat_times.back() - t0);
}

/// Beats at or before `t_end`.
inline BeatSeries truncate_beats(const BeatSeries& beats, double t_end) {
  const auto it = std::upper_bound(beats.beat_times.begin(), beats.beat_times.end(), t_end);
  std::vector<double> kept(beats.beat_times.begin(), it);
  return rr_series(kept);
}

/// Windows whose features use only beats up to the window's last beat: each
/// window gets its own transform over the preceding `history` seconds.
inline std::vector<FeatureWindow> causal_feature_windows(const BeatSeries& beats, const CwtConfig& cwt,
                                                         std::size_t window_len, std::size_t stride) {
  if (window_len < 2) fail(ErrorKind::invalid_argument, "window_len must be >= 2");
  if (stride < 1) fail(ErrorKind::invalid_argument, "stride must be >= 1");
  const auto& bt = beats.beat_times;
  std::vector<FeatureWindow> out;
  for (std::size_t start = 0; start + window_len <= bt.size(); start += stride) {
    const std::size_t last = start + window_len - 1;
    auto from = static_cast<std::size_t>(
        std::lower_bound(bt.begin(), bt.end(), bt[start] - cwt.history) - bt.begin());
    from = std::min(from, last >= 31 ? last - 31 : std::size_t{0});
    if (last - from + 1 < 32) continue;
    const BeatSeries seg = rr_series(std::span<const double>(bt).subspan(from, last - from + 1));
    const auto feats = morlet_cwt(seg, cwt);
    FeatureWindow w;
    w.window_id = start / stride;
    w.first_beat = start;
    w.features = feats.bottomRows(static_cast<Eigen::Index>(window_len));
    w.end_time = bt[last];
    out.push_back(std::move(w));
  }
  return out;
}

inline std::vector<FeatureWindow> feature_windows(const BeatSeries& beats, const PipelineConfig& cfg) {
  if (cfg.cwt.history > 0.0) return causal_feature_windows(beats, cfg.cwt, cfg.window_len, cfg.stride);
  const auto feats = morlet_cwt(beats, cfg.cwt);
  return segment_windows(feats, beats.beat_times, cfg.window_len, cfg.stride);
}

/// True when [start, end] touches [onset - pre, onset + post] for any onset.
inline bool overlaps_event_margin(double start, double end, std::span<const double> onsets,
                                  const EvalConfig& cfg) {
  for (double on : onsets)
    if (end >= on - cfg.pre_event_span && start <= on + cfg.post_event_exclusion) return true;
  return false;
}

inline Representation represent(const FeatureWindow& scaled, const ModelParams& p) {
  return unit_normalize(encode(scaled, p));
}

struct TrainedPipeline {
  ModelParams model;
  FeatureScaler scaler;
  Calibration calibration;
  double boundary = 0.0;
  std::size_t training_windows = 0;
  std::size_t excluded_windows = 0;
  std::vector<double> epoch_loss;
  std::vector<double> training_errors;  // reconstruction MSE per training window
};

/// Fits everything on the first train_fraction of the record, skipping
/// windows that touch an event margin. Reads no beat past the boundary.
inline TrainedPipeline train_pipeline(const BeatSeries& beats, std::span<const double> onsets,
                                      const PipelineConfig& cfg) {
  cfg.validate();
  TrainedPipeline tp{ModelParams{}, FeatureScaler{}, Calibration{DenStream(cfg.cluster), {}}, 0.0, 0, 0, {}, {}};
  tp.boundary = training_boundary(beats, cfg.eval.train_fraction);
  const BeatSeries prefix = truncate_beats(beats, tp.boundary);
  if (prefix.size() < 32) fail(ErrorKind::data, "empty training set");

  std::vector<FeatureWindow> kept;
  for (auto& w : feature_windows(prefix, cfg)) {
    const double start = prefix.beat_times[w.first_beat];
    if (overlaps_event_margin(start, w.end_time, onsets, cfg.eval)) {
      ++tp.excluded_windows;
      continue;
    }
    kept.push_back(std::move(w));
  }
  if (kept.empty()) fail(ErrorKind::data, "empty training set");
  tp.training_windows = kept.size();

  tp.scaler = fit_scaler(kept);
  for (auto& w : kept) w.features = tp.scaler.apply(w.features);

  auto result = train(kept, cfg.d_hidden, cfg.train);
  tp.model = std::move(result.params);
  tp.epoch_loss = std::move(result.epoch_loss);

  std::vector<Eigen::VectorXd> reps;
  std::vector<double> times;
  for (const auto& w : kept) {
    reps.push_back(represent(w, tp.model).values);
    times.push_back(w.end_time);
    tp.training_errors.push_back(reconstruction_error(w, tp.model));
  }
  tp.calibration = calibrate(reps, times, cfg.cluster);
  return tp;
}

struct WindowRecord {
  std::size_t window_id = 0;
  double start_time = 0.0;
  double end_time = 0.0;
  Assignment assignment;
  bool abnormal = false;
  double score = 0.0;
  bool alarm = false;
  double recon_error = 0.0;
};

struct DetectionRun {
  std::vector<WindowRecord> windows;
  std::vector<AlarmEvent> alarms;
  DenStream state;

  std::vector<Assignment> assignments() const {
    std::vector<Assignment> a;
    for (const auto& w : windows) a.push_back(w.assignment);
    return a;
  }
  std::vector<double> times() const {
    std::vector<double> t;
    for (const auto& w : windows) t.push_back(w.end_time);
    return t;
  }
  std::vector<ScoredWindow> scored() const {
    std::vector<ScoredWindow> s;
    for (const auto& w : windows) s.push_back({w.window_id, w.end_time, w.score, w.alarm});
    return s;
  }
  std::vector<double> recon_errors() const {
    std::vector<double> e;
    for (const auto& w : windows) e.push_back(w.recon_error);
    return e;
  }
};

/// Streams every window past the training boundary, in time order, through
/// encode -> normalize -> insert -> observe, continuing from the
/// calibrated clustering state.
inline DetectionRun detect_pipeline(const BeatSeries& beats, const TrainedPipeline& tp,
                                    const PipelineConfig& cfg) {
  cfg.validate();
  DetectionRun run{{}, {}, tp.calibration.state};
  if (beats.size() < 32) return run;
  ConfidenceWindow cw(cfg.k, cfg.threshold);
  const double period = run.state.maintenance_period();
  double last_prune = run.state.last_time();

  for (const auto& raw : feature_windows(beats, cfg)) {
    if (raw.end_time <= tp.boundary) continue;
    const FeatureWindow w = tp.scaler.apply(raw);
    WindowRecord rec;
    rec.window_id = w.window_id;
    rec.start_time = beats.beat_times[w.first_beat];
    rec.end_time = w.end_time;
    rec.recon_error = reconstruction_error(w, tp.model);
    rec.assignment = run.state.insert(represent(w, tp.model).values, w.end_time, w.window_id);
    if (std::isfinite(period) && w.end_time - last_prune >= period) {
      run.state.prune(w.end_time);
      last_prune = w.end_time;
    }
    rec.abnormal = is_abnormal(rec.assignment, tp.calibration.normal);
    rec.alarm = cw.push(rec.abnormal);
    rec.score = cw.score();
    if (rec.alarm) run.alarms.push_back({rec.end_time, rec.score, rec.window_id});
    run.windows.push_back(rec);
  }
  return run;
}

/// Default alarm level for the reconstruction-error baseline: mean + 3 sd of
/// the training-window errors.
inline double baseline_threshold(std::span<const double> training_errors) {
  if (training_errors.empty()) return 0.0;
  double m = 0.0;
  for (double e : training_errors) m += e;
  m /= static_cast<double>(training_errors.size());
  double v = 0.0;
  for (double e : training_errors) v += (e - m) * (e - m);
  v /= static_cast<double>(training_errors.size());
  return m + 3.0 * std::sqrt(v);
}

/// Evaluates reconstruction error as the anomaly score over scaled windows.
inline EvalReport baseline_recon_eval(std::span<const FeatureWindow> scaled_windows, const ModelParams& p,
                                      std::span<const double> onsets, const EvalConfig& cfg,
                                      double threshold) {
  std::vector<double> errors, times;
  for (const auto& w : scaled_windows) {
    errors.push_back(reconstruction_error(w, p));
    times.push_back(w.end_time);
  }
  return evaluate(baseline_scores(errors, times, threshold), onsets, cfg);
}

}  // namespace prodrome
