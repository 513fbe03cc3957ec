#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "prodrome/error.hpp"
#include "prodrome/signal.hpp"

namespace prodrome {

/// One auto-encoder input: l consecutive per-beat feature vectors.
struct FeatureWindow {
  std::size_t window_id = 0;
  std::size_t first_beat = 0;  // beat_index_range = [first_beat, first_beat + length())
  Eigen::MatrixXd features;    // length() x dim()
  double end_time = 0.0;       // time of the last covered beat

  std::size_t length() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t end_beat() const { return first_beat + length(); }
};

/// Cuts [k*stride, k*stride + window_len) windows from per-beat features;
/// a trailing partial window is dropped.
inline std::vector<FeatureWindow> segment_windows(const Eigen::MatrixXd& features,
                                                  std::span<const double> beat_times,
                                                  std::size_t window_len = 64,
                                                  std::size_t stride = 64) {
  if (window_len < 2) fail(ErrorKind::invalid_argument, "window_len must be >= 2");
  if (stride < 1) fail(ErrorKind::invalid_argument, "stride must be >= 1");
  const auto n = static_cast<std::size_t>(features.rows());
  if (beat_times.size() != n)
    fail(ErrorKind::invalid_argument, "beat times and feature rows disagree");

  std::vector<FeatureWindow> out;
  for (std::size_t start = 0; start + window_len <= n; start += stride) {
    FeatureWindow w;
    w.window_id = out.size();
    w.first_beat = start;
    w.features = features.middleRows(static_cast<Eigen::Index>(start),
                                     static_cast<Eigen::Index>(window_len));
    w.end_time = beat_times[start + window_len - 1];
    out.push_back(std::move(w));
  }
  return out;
}

/// Per-channel z-scoring fitted on training windows.
struct FeatureScaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
  std::vector<bool> constant;  // channels whose std was forced to 1

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    if (static_cast<std::size_t>(x.cols()) != dim())
      fail(ErrorKind::invalid_argument, "feature dimension mismatch");
    return (x.rowwise() - mean.transpose()).array().rowwise() / stddev.transpose().array();
  }

  FeatureWindow apply(const FeatureWindow& w) const {
    FeatureWindow out = w;
    out.features = apply(w.features);
    return out;
  }

  Eigen::MatrixXd invert(const Eigen::MatrixXd& z) const {
    if (static_cast<std::size_t>(z.cols()) != dim())
      fail(ErrorKind::invalid_argument, "feature dimension mismatch");
    Eigen::MatrixXd x = z.array().rowwise() * stddev.transpose().array();
    return x.rowwise() + mean.transpose();
  }
};

inline FeatureScaler fit_scaler(std::span<const FeatureWindow> windows) {
  if (windows.empty()) fail(ErrorKind::data, "no training data");
  const auto d = static_cast<Eigen::Index>(windows.front().dim());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  double count = 0.0;
  for (const auto& w : windows) {
    if (w.features.cols() != d) fail(ErrorKind::invalid_argument, "feature dimension mismatch");
    sum += w.features.colwise().sum().transpose();
    count += static_cast<double>(w.features.rows());
  }
  FeatureScaler s;
  s.mean = sum / count;
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(d);
  for (const auto& w : windows)
    sq += (w.features.rowwise() - s.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  s.stddev = (sq / count).cwiseSqrt();
  s.constant.assign(static_cast<std::size_t>(d), false);
  for (Eigen::Index c = 0; c < d; ++c) {
    if (!(s.stddev(c) > 0.0)) {
      s.stddev(c) = 1.0;
      s.constant[static_cast<std::size_t>(c)] = true;
    }
  }
  return s;
}

}  // namespace prodrome
