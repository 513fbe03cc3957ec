#pragma once

// Subcommand bodies behind the command-line tool. Each takes a resolved
// RunConfig and file paths and writes its outputs into an output directory.

#include <algorithm>
#include <filesystem>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prodrome/artifacts.hpp"
#include "prodrome/config.hpp"
#include "prodrome/csv.hpp"
#include "prodrome/eval.hpp"
#include "prodrome/pipeline.hpp"
#include "prodrome/signal.hpp"
#include "prodrome/svg.hpp"
#include "prodrome/synth.hpp"

namespace prodrome {

namespace fs = std::filesystem;

struct InputPaths {
  std::optional<fs::path> beats;   // beat_time_sec CSV
  std::optional<fs::path> ecg;     // t_sec,mv CSV
  std::optional<fs::path> events;  // onset_sec CSV; derived from the beats when absent
};

inline BeatSeries load_beats(const InputPaths& in) {
  if (in.beats && in.ecg) fail(ErrorKind::config, "give either beats or ecg input, not both");
  if (in.beats) {
    auto f = detail::open_in(in.beats->string());
    return rr_series(read_beats_csv(f));
  }
  if (in.ecg) {
    auto f = detail::open_in(in.ecg->string());
    return detect_r_peaks(read_ecg_csv(f));
  }
  fail(ErrorKind::config, "no input: give beats or ecg");
}

inline std::vector<double> load_onsets(const InputPaths& in, const BeatSeries& beats, const PipelineConfig& cfg) {
  if (in.events) {
    auto f = detail::open_in(in.events->string());
    return read_events_csv(f);
  }
  return derive_bradycardia_onsets(beats, cfg.hr_threshold, cfg.brady_min_beats);
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json leads = json::array();
  for (const auto& l : r.per_event_leads) leads.push_back(opt(l));
  const auto& c = r.counts;
  return {{"recall", std::isnan(r.recall) ? json(nullptr) : json(r.recall)},
          {"specificity", opt(r.specificity)},
          {"auc", opt(r.auc)},
          {"mean_lead_min", opt(r.mean_lead_min)},
          {"max_lead_min", opt(r.max_lead_min)},
          {"per_event_leads", leads},
          {"counts",
           {{"events", c.events},
            {"detected_events", c.detected_events},
            {"missed_events", c.missed_events},
            {"tp_alarms", c.tp_alarms},
            {"fp_alarms", c.fp_alarms},
            {"ignored_alarms", c.ignored_alarms},
            {"tn_segments", c.tn_segments},
            {"negative_segments", c.negative_segments},
            {"positive_windows", c.positive_windows},
            {"negative_windows", c.negative_windows},
            {"excluded_windows", c.excluded_windows}}},
          {"warnings", r.warnings}};
}

/// Onsets that fall inside the evaluated span (at or after its first window).
inline std::vector<double> onsets_in_span(std::span<const double> onsets, double first_time) {
  std::vector<double> out;
  for (double o : onsets)
    if (o >= first_time) out.push_back(o);
  return out;
}

// --- synth -------------------------------------------------------------------

/// beats.csv, events.csv, drift.csv; plus ecg.csv when ecg_rate > 0.
inline SynthData cmd_synth(const RunConfig& cfg, const fs::path& out_dir, double ecg_rate = 0.0,
                           double ecg_snr_db = 20.0) {
  cfg.synth.validate();
  auto data = generate_synthetic(cfg.synth);
  fs::create_directories(out_dir);
  {
    auto f = detail::open_out((out_dir / "beats.csv").string());
    write_beats_csv(f, data.beats.beat_times);
  }
  {
    auto f = detail::open_out((out_dir / "events.csv").string());
    write_events_csv(f, data.onsets);
  }
  {
    auto f = detail::open_out((out_dir / "drift.csv").string());
    write_intervals_csv(f, data.drift_intervals);
  }
  if (ecg_rate > 0.0) {
    const auto ecg = synthetic_ecg(data.beats.beat_times, data.beats.beat_times.back() + 1.0, ecg_rate, ecg_snr_db,
                                   cfg.synth.seed);
    auto f = detail::open_out((out_dir / "ecg.csv").string());
    write_ecg_csv(f, ecg);
  }
  return data;
}

// --- train -------------------------------------------------------------------

inline TrainedPipeline cmd_train(const RunConfig& cfg, const InputPaths& in, const fs::path& out_dir) {
  cfg.pipeline.validate();
  const auto beats = load_beats(in);
  const auto onsets = load_onsets(in, beats, cfg.pipeline);
  auto tp = train_pipeline(beats, onsets, cfg.pipeline);
  save_artifacts(out_dir, tp, config_hash(cfg));
  return tp;
}

// --- detect ------------------------------------------------------------------

inline std::vector<WindowLogRow> window_log(const DetectionRun& run, double baseline_level) {
  std::vector<double> errors, times;
  for (const auto& w : run.windows) {
    errors.push_back(w.recon_error);
    times.push_back(w.end_time);
  }
  const auto base = baseline_scores(errors, times, baseline_level);
  std::vector<WindowLogRow> rows;
  for (std::size_t i = 0; i < run.windows.size(); ++i) {
    const auto& w = run.windows[i];
    rows.push_back({w.window_id, w.end_time, w.score, w.alarm, w.assignment.macro_id, w.assignment.micro_id,
                    w.abnormal, w.recon_error, base[i].alarm});
  }
  return rows;
}

/// alarms.csv, windows.csv and clusters.csv (final clustering state).
inline DetectionRun cmd_detect(const RunConfig& cfg, const InputPaths& in, const fs::path& artifacts,
                               const fs::path& out_dir, bool force) {
  cfg.pipeline.validate();
  const auto bundle = load_artifacts(artifacts, config_hash(cfg), force);
  const auto beats = load_beats(in);
  auto run = detect_pipeline(beats, bundle.trained, cfg.pipeline);
  fs::create_directories(out_dir);
  {
    auto f = detail::open_out((out_dir / "alarms.csv").string());
    write_alarms_csv(f, run.alarms);
  }
  {
    auto f = detail::open_out((out_dir / "windows.csv").string());
    write_window_log_csv(f, window_log(run, bundle.manifest.baseline_threshold));
  }
  {
    auto f = detail::open_out((out_dir / "clusters.csv").string());
    write_cluster_state_csv(f, run.state.snapshot(), bundle.trained.model.d_h);
  }
  return run;
}

// --- eval --------------------------------------------------------------------

/// report.json and scores.csv from a window log. `baseline` scores windows by
/// reconstruction error instead of the confidence-window score.
inline EvalReport cmd_eval(const RunConfig& cfg, const fs::path& windows_csv, const fs::path& events_csv,
                           const fs::path& out_dir, bool baseline = false) {
  cfg.pipeline.eval.validate();
  std::vector<WindowLogRow> rows;
  {
    auto f = detail::open_in(windows_csv.string());
    rows = read_window_log_csv(f);
  }
  std::vector<double> onsets;
  {
    auto f = detail::open_in(events_csv.string());
    onsets = read_events_csv(f);
  }
  std::vector<ScoredWindow> scored;
  for (const auto& r : rows)
    scored.push_back(baseline ? ScoredWindow{r.window_id, r.time, r.recon_error, r.recon_alarm}
                              : ScoredWindow{r.window_id, r.time, r.score, r.alarm});
  if (!rows.empty()) onsets = onsets_in_span(onsets, rows.front().time);
  const auto report = evaluate(scored, onsets, cfg.pipeline.eval);

  fs::create_directories(out_dir);
  detail::write_json_file(out_dir / "report.json", report_to_json(report));
  std::vector<double> times;
  for (const auto& s : scored) times.push_back(s.time);
  auto f = detail::open_out((out_dir / "scores.csv").string());
  write_scores_csv(f, scored, label_timeline(times, onsets, cfg.pipeline.eval));
  return report;
}

// --- sweep -------------------------------------------------------------------

/// Runs detection once, then replays the alarm stage for every k.
/// Writes sweep.csv, sweep.svg and report_k<k>.json.
inline std::vector<SweepPoint> cmd_sweep(const RunConfig& cfg, const InputPaths& in, const fs::path& artifacts,
                                         std::span<const std::size_t> ks, const fs::path& out_dir, bool force) {
  cfg.pipeline.validate();
  if (ks.empty()) fail(ErrorKind::config, "empty k list");
  for (auto k : ks)
    if (k < 1) fail(ErrorKind::config, "k must be >= 1");
  const auto bundle = load_artifacts(artifacts, config_hash(cfg), force);
  const auto beats = load_beats(in);
  auto onsets = load_onsets(in, beats, cfg.pipeline);
  const auto run = detect_pipeline(beats, bundle.trained, cfg.pipeline);
  if (!run.windows.empty()) onsets = onsets_in_span(onsets, run.windows.front().end_time);
  const auto assignments = run.assignments();
  const auto times = run.times();
  const auto points = sweep_confidence_window(ks, assignments, times, bundle.trained.calibration.normal, onsets,
                                              cfg.pipeline.eval, cfg.pipeline.threshold);

  fs::create_directories(out_dir);
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  auto f = detail::open_out((out_dir / "sweep.csv").string());
  f << "k,recall,specificity,auc,mean_lead_min\n";
  for (const auto& p : points) {
    f << p.k << ',' << (std::isnan(p.report.recall) ? std::string() : format_number(p.report.recall)) << ','
      << opt(p.report.specificity) << ',' << opt(p.report.auc) << ',' << opt(p.report.mean_lead_min) << '\n';
    detail::write_json_file(out_dir / ("report_k" + std::to_string(p.k) + ".json"), report_to_json(p.report));
  }
  auto svg = detail::open_out((out_dir / "sweep.svg").string());
  svg << sweep_svg(points);
  return points;
}

// --- plot --------------------------------------------------------------------

/// Timeline SVG from a window log (time and macro id per window).
inline std::string cmd_plot_timeline(const RunConfig& cfg, const fs::path& windows_csv,
                                     const std::optional<fs::path>& events_csv, const fs::path& out_svg) {
  std::vector<WindowLogRow> rows;
  {
    auto f = detail::open_in(windows_csv.string());
    rows = read_window_log_csv(f);
  }
  std::vector<double> onsets;
  if (events_csv) {
    auto f = detail::open_in(events_csv->string());
    onsets = read_events_csv(f);
  }
  std::vector<TimelinePoint> pts;
  for (const auto& r : rows) pts.push_back({r.time, r.macro_id});
  const auto svg = timeline_svg(pts, onsets, cfg.pipeline.eval.pre_event_span);
  if (out_svg.has_parent_path()) fs::create_directories(out_svg.parent_path());
  auto f = detail::open_out(out_svg.string());
  f << svg;
  return svg;
}

}  // namespace prodrome
