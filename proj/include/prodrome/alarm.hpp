#pragma once

// Normal-cluster calibration and the confidence-window alarm rule.

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <span>
#include <utility>

#include "prodrome/denstream.hpp"
#include "prodrome/error.hpp"

namespace prodrome {

/// Macro-cluster ids formed by training representations ("C").
struct NormalClusterSet {
  std::set<std::int64_t> ids;
  std::size_t training_windows = 0;
  double calibrated_at = 0.0;  // stream time of the last training window

  bool contains(std::int64_t id) const { return ids.contains(id); }
};

struct Calibration {
  DenStream state;
  NormalClusterSet normal;
};

/// Streams training representations (with their times) into a fresh
/// clustering state and records every macro-cluster present at the end.
inline Calibration calibrate(std::span<const Eigen::VectorXd> reps, std::span<const double> times,
                             const ClusterParams& params) {
  if (reps.size() != times.size()) fail(ErrorKind::invalid_argument, "reps and times disagree");
  if (static_cast<double>(reps.size()) < params.mu)
    fail(ErrorKind::data, "calibration failed: no dense normal region");
  Calibration cal{DenStream(params), {}};
  for (std::size_t i = 0; i < reps.size(); ++i) cal.state.insert(reps[i], times[i], i);
  for (const auto& [micro, macro] : cal.state.macro_clusters()) cal.normal.ids.insert(macro);
  if (cal.normal.ids.empty()) fail(ErrorKind::data, "calibration failed: no dense normal region");
  cal.normal.training_windows = reps.size();
  cal.normal.calibrated_at = times.empty() ? 0.0 : times.back();
  return cal;
}

inline Calibration calibrate(std::span<const Eigen::VectorXd> reps, const ClusterParams& params) {
  std::vector<double> times(reps.size());
  for (std::size_t i = 0; i < times.size(); ++i) times[i] = static_cast<double>(i);
  return calibrate(reps, times, params);
}

struct AlarmEvent {
  double time = 0.0;  // end time of the triggering window
  double score = 0.0;
  std::size_t window_id = 0;
};

/// Abnormal iff the window joined a dense macro-cluster outside C.
/// Outlier windows count as normal.
inline bool is_abnormal(const Assignment& a, const NormalClusterSet& normal) {
  return !a.is_outlier() && !normal.contains(a.macro_id);
}

/// Ring buffer of the last k verdicts with a re-arming alarm.
class ConfidenceWindow {
 public:
  explicit ConfidenceWindow(std::size_t k = 5, double threshold = 0.5)
      : k_(k), threshold_(threshold) {
    if (k_ < 1) fail(ErrorKind::config, "confidence window k must be >= 1");
    if (!(threshold_ > 0.0 && threshold_ <= 1.0)) fail(ErrorKind::config, "threshold must be in (0, 1]");
  }

  std::size_t k() const { return k_; }
  double threshold() const { return threshold_; }
  bool armed() const { return armed_; }
  std::size_t size() const { return buffer_.size(); }
  std::size_t abnormal_count() const { return abnormal_; }

  /// Abnormal fraction over min(k, observed) verdicts; 0 before any.
  double score() const {
    return buffer_.empty() ? 0.0 : static_cast<double>(abnormal_) / static_cast<double>(buffer_.size());
  }

  /// Pushes one verdict; returns true when this observation fires an alarm.
  bool push(bool abnormal) {
    buffer_.push_back(abnormal);
    abnormal_ += abnormal ? 1 : 0;
    if (buffer_.size() > k_) {
      abnormal_ -= buffer_.front() ? 1 : 0;
      buffer_.pop_front();
    }
    const bool over = static_cast<double>(abnormal_) >= threshold_ * static_cast<double>(buffer_.size());
    if (!over) {
      armed_ = true;
      return false;
    }
    if (!armed_) return false;
    armed_ = false;
    return true;
  }

  std::optional<AlarmEvent> observe(const Assignment& a, const NormalClusterSet& normal,
                                    double window_end_time) {
    if (push(is_abnormal(a, normal))) return AlarmEvent{window_end_time, score(), a.window_id};
    return std::nullopt;
  }

  void reset() {
    buffer_.clear();
    abnormal_ = 0;
    armed_ = true;
  }

 private:
  std::size_t k_;
  double threshold_;
  std::deque<bool> buffer_;
  std::size_t abnormal_ = 0;
  bool armed_ = true;
};

}  // namespace prodrome
