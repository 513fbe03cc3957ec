#pragma once

// Event-level evaluation: pre-event positives, post-event exclusion,
// per-interval specificity, per-window AUC and earliest-alarm lead time.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prodrome/alarm.hpp"
#include "prodrome/denstream.hpp"
#include "prodrome/error.hpp"

namespace prodrome {

struct EvalConfig {
  double pre_event_span = 180.0;        // s
  double post_event_exclusion = 360.0;  // s
  double train_fraction = 1.0 / 3.0;

  void validate() const {
    if (!(pre_event_span > 0.0) || !(post_event_exclusion > 0.0))
      fail(ErrorKind::config, "evaluation spans must be > 0");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
      fail(ErrorKind::config, "train_fraction must be in (0, 1)");
  }
};

enum class Region { positive, negative, excluded };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::positive: return "positive";
    case Region::negative: return "negative";
    case Region::excluded: return "excluded";
  }
  return "?";
}

/// Positive spans [onset - pre, onset) take precedence over exclusion spans
/// [onset, onset + post) of earlier events.
inline Region label_time(double t, std::span<const double> onsets, const EvalConfig& cfg) {
  // First onset strictly after t decides positivity.
  const auto next = std::upper_bound(onsets.begin(), onsets.end(), t);
  if (next != onsets.end() && *next - t <= cfg.pre_event_span) return Region::positive;
  if (next != onsets.begin() && t - *(next - 1) < cfg.post_event_exclusion) return Region::excluded;
  return Region::negative;
}

inline std::vector<Region> label_timeline(std::span<const double> times, std::span<const double> onsets,
                                          const EvalConfig& cfg) {
  std::vector<double> sorted(onsets.begin(), onsets.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<Region> out(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) out[i] = label_time(times[i], sorted, cfg);
  return out;
}

struct EventScore {
  double recall = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::optional<double>> lead_minutes;  // per onset, earliest TP alarm
  std::size_t tp_alarms = 0;
  std::size_t detected = 0;
};

/// An alarm at t is a true positive for the first onset in (t, t + pre].
inline EventScore score_events(std::span<const double> alarm_times, std::span<const double> onsets,
                               const EvalConfig& cfg) {
  std::vector<double> ev(onsets.begin(), onsets.end());
  std::sort(ev.begin(), ev.end());
  EventScore s;
  std::vector<double> earliest(ev.size(), std::numeric_limits<double>::infinity());
  for (double t : alarm_times) {
    const auto next = std::upper_bound(ev.begin(), ev.end(), t);
    if (next == ev.end() || *next - t > cfg.pre_event_span) continue;
    ++s.tp_alarms;
    auto& e = earliest[static_cast<std::size_t>(next - ev.begin())];
    e = std::min(e, t);
  }
  s.lead_minutes.resize(ev.size());
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (std::isfinite(earliest[i])) {
      s.lead_minutes[i] = (ev[i] - earliest[i]) / 60.0;
      ++s.detected;
    }
  }
  if (!ev.empty()) s.recall = static_cast<double>(s.detected) / static_cast<double>(ev.size());
  return s;
}

struct NegativeScore {
  double specificity = std::numeric_limits<double>::quiet_NaN();
  std::size_t instances = 0;
  std::size_t true_negatives = 0;
  std::size_t fp_alarms = 0;
  std::optional<std::string> warning;
};

/// Each maximal run of time-consecutive negative decision points is one
/// negative instance; it is a true negative iff no alarm fires inside it.
/// Alarms in excluded or positive regions never void a negative instance.
inline NegativeScore score_negatives(std::span<const double> alarm_times, std::span<const double> times,
                                     std::span<const Region> labels) {
  if (times.size() != labels.size()) fail(ErrorKind::invalid_argument, "times and labels disagree");
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] < times[b]; });

  struct Run { double lo, hi; };
  std::vector<Run> runs;
  bool in_run = false;
  for (std::size_t idx : order) {
    if (labels[idx] == Region::negative) {
      if (!in_run) runs.push_back({times[idx], times[idx]});
      runs.back().hi = times[idx];
      in_run = true;
    } else {
      in_run = false;
    }
  }

  NegativeScore s;
  s.instances = runs.size();
  std::vector<char> voided(runs.size(), 0);
  for (double t : alarm_times) {
    const auto it = std::upper_bound(runs.begin(), runs.end(), t, [](double v, const Run& r) { return v < r.lo; });
    if (it == runs.begin()) continue;
    const auto& r = *(it - 1);
    if (t <= r.hi) {
      voided[static_cast<std::size_t>(it - 1 - runs.begin())] = 1;
      ++s.fp_alarms;
    }
  }
  s.true_negatives = runs.size() - static_cast<std::size_t>(std::count(voided.begin(), voided.end(), 1));
  if (runs.empty()) {
    s.warning = "no negative regions";
  } else {
    s.specificity = static_cast<double>(s.true_negatives) / static_cast<double>(runs.size());
  }
  return s;
}

/// Mann-Whitney AUC with average ranks (ties count 1/2).
inline double auc_from_classes(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) fail(ErrorKind::data, "AUC undefined");
  struct Item { double score; bool pos; };
  std::vector<Item> all;
  all.reserve(positives.size() + negatives.size());
  for (double v : positives) all.push_back({v, true});
  for (double v : negatives) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
  // Twice the rank sum keeps everything integral.
  double twice_rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double twice_avg_rank = static_cast<double>(i + 1 + j);  // ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (all[k].pos) twice_rank_sum += twice_avg_rank;
    i = j;
  }
  const double np = static_cast<double>(positives.size());
  const double nn = static_cast<double>(negatives.size());
  const double twice_u = twice_rank_sum - np * (np + 1.0);
  return twice_u / (2.0 * np * nn);
}

inline double compute_auc(std::span<const double> scores, std::span<const Region> labels) {
  if (scores.size() != labels.size()) fail(ErrorKind::invalid_argument, "scores and labels disagree");
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == Region::positive) pos.push_back(scores[i]);
    else if (labels[i] == Region::negative) neg.push_back(scores[i]);
  }
  return auc_from_classes(pos, neg);
}

struct EvalCounts {
  std::size_t events = 0;
  std::size_t detected_events = 0;
  std::size_t missed_events = 0;
  std::size_t tp_alarms = 0;
  std::size_t fp_alarms = 0;
  std::size_t ignored_alarms = 0;  // inside excluded spans
  std::size_t tn_segments = 0;
  std::size_t negative_segments = 0;
  std::size_t positive_windows = 0;
  std::size_t negative_windows = 0;
  std::size_t excluded_windows = 0;
};

struct EvalReport {
  double recall = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> specificity;
  std::optional<double> auc;
  std::optional<double> mean_lead_min;
  std::optional<double> max_lead_min;
  std::vector<std::optional<double>> per_event_leads;
  EvalCounts counts;
  std::vector<std::string> warnings;
};

/// One scored decision point of a detection run.
struct ScoredWindow {
  std::size_t window_id = 0;
  double time = 0.0;
  double score = 0.0;
  bool alarm = false;
};

inline EvalReport evaluate(std::span<const ScoredWindow> windows, std::span<const double> onsets,
                           const EvalConfig& cfg) {
  cfg.validate();
  std::vector<double> times, scores, alarms;
  for (const auto& w : windows) {
    times.push_back(w.time);
    scores.push_back(w.score);
    if (w.alarm) alarms.push_back(w.time);
  }
  std::sort(alarms.begin(), alarms.end());
  const auto labels = label_timeline(times, onsets, cfg);

  EvalReport r;
  const auto ev = score_events(alarms, onsets, cfg);
  r.recall = ev.recall;
  r.per_event_leads = ev.lead_minutes;
  double sum = 0.0, mx = 0.0;
  for (const auto& l : ev.lead_minutes) {
    if (!l) continue;
    sum += *l;
    mx = std::max(mx, *l);
  }
  if (ev.detected > 0) {
    r.mean_lead_min = sum / static_cast<double>(ev.detected);
    r.max_lead_min = mx;
  }

  const auto neg = score_negatives(alarms, times, labels);
  if (neg.warning) r.warnings.push_back(*neg.warning);
  else r.specificity = neg.specificity;

  try {
    r.auc = compute_auc(scores, labels);
  } catch (const Error& e) {
    r.warnings.push_back(e.what());
  }

  std::vector<double> sorted_onsets(onsets.begin(), onsets.end());
  std::sort(sorted_onsets.begin(), sorted_onsets.end());
  for (double t : alarms)
    if (label_time(t, sorted_onsets, cfg) == Region::excluded) ++r.counts.ignored_alarms;

  r.counts.events = onsets.size();
  r.counts.detected_events = ev.detected;
  r.counts.missed_events = onsets.size() - ev.detected;
  r.counts.tp_alarms = ev.tp_alarms;
  r.counts.fp_alarms = neg.fp_alarms;
  r.counts.tn_segments = neg.true_negatives;
  r.counts.negative_segments = neg.instances;
  for (auto l : labels) {
    if (l == Region::positive) ++r.counts.positive_windows;
    else if (l == Region::negative) ++r.counts.negative_windows;
    else ++r.counts.excluded_windows;
  }
  return r;
}

/// Replays window verdicts through a size-k confidence window.
inline std::vector<ScoredWindow> replay_alarms(std::span<const Assignment> assignments,
                                               std::span<const double> times,
                                               const NormalClusterSet& normal, std::size_t k,
                                               double threshold) {
  if (assignments.size() != times.size()) fail(ErrorKind::invalid_argument, "assignments and times disagree");
  ConfidenceWindow cw(k, threshold);
  std::vector<ScoredWindow> out(assignments.size());
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const bool fired = cw.push(is_abnormal(assignments[i], normal));
    out[i] = {assignments[i].window_id, times[i], cw.score(), fired};
  }
  return out;
}

struct SweepPoint {
  std::size_t k = 0;
  EvalReport report;
};

/// Re-runs only the alarm stage for every k over cached assignments.
inline std::vector<SweepPoint> sweep_confidence_window(std::span<const std::size_t> ks,
                                                       std::span<const Assignment> assignments,
                                                       std::span<const double> times,
                                                       const NormalClusterSet& normal,
                                                       std::span<const double> onsets,
                                                       const EvalConfig& cfg, double threshold = 0.5) {
  std::vector<SweepPoint> out;
  for (std::size_t k : ks) {
    const auto scored = replay_alarms(assignments, times, normal, k, threshold);
    out.push_back({k, evaluate(scored, onsets, cfg)});
  }
  return out;
}

/// Reconstruction-error baseline: the error itself is the window score; an
/// alarm fires when it first reaches `threshold` (re-arming below it).
inline std::vector<ScoredWindow> baseline_scores(std::span<const double> errors,
                                                 std::span<const double> times, double threshold) {
  if (errors.size() != times.size()) fail(ErrorKind::invalid_argument, "errors and times disagree");
  std::vector<ScoredWindow> out(errors.size());
  bool armed = true;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    bool fired = false;
    if (errors[i] >= threshold) {
      fired = armed;
      armed = false;
    } else {
      armed = true;
    }
    out[i] = {i, times[i], errors[i], fired};
  }
  return out;
}

}  // namespace prodrome
