#pragma once

// Deterministic SVG figures: metric-vs-k sweep and cluster timeline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prodrome/eval.hpp"

namespace prodrome {

namespace detail {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Frame {
  double width = 640, height = 400;
  double left = 60, right = 130, top = 30, bottom = 50;

  double plot_w() const { return width - left - right; }
  double plot_h() const { return height - top - bottom; }
  double x(double v, double lo, double hi) const {
    return left + (hi > lo ? (v - lo) / (hi - lo) : 0.5) * plot_w();
  }
  double y(double v, double lo, double hi) const {
    return top + plot_h() - (hi > lo ? (v - lo) / (hi - lo) : 0.5) * plot_h();
  }
};

inline std::string svg_open(const Frame& f, const std::string& title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt2(f.width) + "\" height=\"" +
                  fmt2(f.height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt2(f.width / 2) + "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" + title + "</text>\n";
  s += "<rect x=\"" + fmt2(f.left) + "\" y=\"" + fmt2(f.top) + "\" width=\"" + fmt2(f.plot_w()) + "\" height=\"" +
       fmt2(f.plot_h()) + "\" fill=\"none\" stroke=\"black\"/>\n";
  return s;
}

inline std::string text(double x, double y, const std::string& t, const char* anchor = "middle") {
  return "<text x=\"" + fmt2(x) + "\" y=\"" + fmt2(y) + "\" text-anchor=\"" + anchor + "\">" + t + "</text>\n";
}

inline std::string line(double x1, double y1, double x2, double y2, const std::string& stroke,
                        double width = 1.0) {
  return "<line x1=\"" + fmt2(x1) + "\" y1=\"" + fmt2(y1) + "\" x2=\"" + fmt2(x2) + "\" y2=\"" + fmt2(y2) +
         "\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt2(width) + "\"/>\n";
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[i % 10];
}

}  // namespace detail

/// One polyline per metric. Recall, specificity and AUC use the left [0, 1]
/// axis; the earliest lead (minutes) uses the right axis.
inline std::string sweep_svg(std::span<const SweepPoint> points) {
  using namespace detail;
  Frame f;
  std::string s = svg_open(f, "Metrics vs confidence window k");
  double k_lo = 1, k_hi = 1, lead_hi = 1.0;
  if (!points.empty()) {
    k_lo = static_cast<double>(points.front().k);
    k_hi = static_cast<double>(points.back().k);
    for (const auto& p : points) lead_hi = std::max(lead_hi, std::ceil(p.report.mean_lead_min.value_or(0.0)));
  }
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    s += text(f.left - 6, f.y(v, 0, 1) + 4, fmt2(v), "end");
    s += text(f.left + f.plot_w() + 6, f.y(v, 0, 1) + 4, fmt2(v * lead_hi), "start");
  }
  for (const auto& p : points) s += text(f.x(static_cast<double>(p.k), k_lo, k_hi), f.top + f.plot_h() + 16, std::to_string(p.k));
  s += text(f.left + f.plot_w() / 2, f.height - 12, "k");
  s += text(f.left + f.plot_w() + 50, f.top - 8, "lead (min)", "middle");

  struct Series {
    const char* name;
    std::optional<double> (*get)(const EvalReport&);
    bool right_axis;
  };
  const Series series[] = {
      {"recall", [](const EvalReport& r) -> std::optional<double> {
         return std::isnan(r.recall) ? std::nullopt : std::optional<double>(r.recall);
       }, false},
      {"specificity", [](const EvalReport& r) { return r.specificity; }, false},
      {"AUC", [](const EvalReport& r) { return r.auc; }, false},
      {"earliest", [](const EvalReport& r) { return r.mean_lead_min; }, true},
  };
  for (std::size_t si = 0; si < 4; ++si) {
    const auto& ser = series[si];
    std::string pts;
    for (const auto& p : points) {
      const auto v = ser.get(p.report);
      if (!v) continue;
      const double yv = ser.right_axis ? *v / lead_hi : *v;
      const double px = f.x(static_cast<double>(p.k), k_lo, k_hi), py = f.y(yv, 0, 1);
      pts += fmt2(px) + "," + fmt2(py) + " ";
      s += "<circle cx=\"" + fmt2(px) + "\" cy=\"" + fmt2(py) + "\" r=\"3\" fill=\"" + palette(si) + "\"/>\n";
    }
    if (!pts.empty()) {
      pts.pop_back();
      s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + palette(si) + "\"/>\n";
    }
    const double ly = f.top + 20 + 16.0 * static_cast<double>(si);
    s += line(f.left + f.plot_w() + 40, ly - 4, f.left + f.plot_w() + 55, ly - 4, palette(si), 2);
    s += text(f.left + f.plot_w() + 60, ly, ser.name, "start");
  }
  return s + "</svg>\n";
}

struct TimelinePoint {
  double time = 0.0;
  std::int64_t macro_id = -1;
};

/// Cluster-vs-time scatter: one y-level per distinct macro id (ascending),
/// circles, switched to crosses within the pre-event span of an onset.
inline std::string timeline_svg(std::span<const TimelinePoint> points, std::span<const double> onsets,
                                double pre_event_span = 180.0) {
  using namespace detail;
  Frame f;
  f.width = 800;
  f.right = 30;
  std::string s = svg_open(f, "Online clustering timeline");
  std::map<std::int64_t, std::size_t> level;
  for (const auto& p : points) level.emplace(p.macro_id, 0);
  std::size_t next = 0;
  for (auto& [id, lv] : level) lv = next++;

  double t_lo = 0, t_hi = 1;
  if (!points.empty()) {
    t_lo = points.front().time;
    t_hi = points.front().time;
    for (const auto& p : points) {
      t_lo = std::min(t_lo, p.time);
      t_hi = std::max(t_hi, p.time);
    }
  }
  const double n_levels = static_cast<double>(std::max<std::size_t>(level.size(), 1));
  auto level_y = [&](std::size_t lv) { return f.y(static_cast<double>(lv) + 0.5, 0, n_levels); };
  for (const auto& [id, lv] : level)
    s += text(f.left - 6, level_y(lv) + 4, id < 0 ? std::string("outlier") : std::to_string(id), "end");
  s += text(f.left, f.top + f.plot_h() + 16, fmt2(t_lo));
  s += text(f.left + f.plot_w(), f.top + f.plot_h() + 16, fmt2(t_hi));
  s += text(f.left + f.plot_w() / 2, f.height - 12, "time (s)");

  for (double on : onsets) {
    if (points.empty() || on < t_lo || on > t_hi) continue;
    const double x = f.x(on, t_lo, t_hi);
    s += line(x, f.top, x, f.top + f.plot_h(), "#999999");
  }
  for (const auto& p : points) {
    const double x = f.x(p.time, t_lo, t_hi), y = level_y(level[p.macro_id]);
    const char* color = palette(level[p.macro_id]);
    bool pre = false;
    for (double on : onsets)
      if (p.time >= on - pre_event_span && p.time < on) pre = true;
    if (pre) {
      s += line(x - 3, y - 3, x + 3, y + 3, color, 1.5);
      s += line(x - 3, y + 3, x + 3, y - 3, color, 1.5);
    } else {
      s += "<circle cx=\"" + fmt2(x) + "\" cy=\"" + fmt2(y) + "\" r=\"2.5\" fill=\"none\" stroke=\"" + color + "\"/>\n";
    }
  }
  return s + "</svg>\n";
}

}  // namespace prodrome
