#pragma once

// Plain CSV formats used on disk. Every reader checks the exact header and
// reports the 1-based line of the first malformed row. Numbers are written
// in shortest round-trip form so write -> read -> write is the identity.

#include <Eigen/Core>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "prodrome/alarm.hpp"
#include "prodrome/denstream.hpp"
#include "prodrome/error.hpp"
#include "prodrome/eval.hpp"
#include "prodrome/signal.hpp"

namespace prodrome {

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class Int>
inline std::string format_number(Int v)
  requires std::is_integral_v<Int>
{
  return std::to_string(v);
}

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& what, std::size_t line, const std::string& msg) {
  fail(ErrorKind::data, what + ": parse error at line " + std::to_string(line) + ": " + msg);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

template <class Int>
inline bool parse_int(std::string_view s, Int& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

/// Row-by-row reader: checks the header, skips blank lines, tracks line numbers.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {
    if (!std::getline(in_, header_)) parse_fail(what_, 1, "missing header");
    header_ = std::string(trim(header_));
    line_ = 1;
  }

  CsvReader(std::istream& in, std::string what, std::string_view header) : CsvReader(in, std::move(what)) {
    expect_header(header);
  }

  const std::string& header() const { return header_; }

  void expect_header(std::string_view header) const {
    if (header_ != header) parse_fail(what_, 1, "expected header '" + std::string(header) + "'");
  }

  /// Next non-blank row split into fields; false at end of input.
  bool next(std::vector<std::string_view>& fields) {
    while (std::getline(in_, buf_)) {
      ++line_;
      if (trim(buf_).empty()) continue;
      fields = split_fields(buf_);
      return true;
    }
    return false;
  }

  std::size_t line() const { return line_; }
  [[noreturn]] void error(const std::string& msg) const { parse_fail(what_, line_, msg); }

  double number(std::string_view field, const char* name) const {
    double v = 0.0;
    if (!parse_double(field, v)) error(std::string("bad ") + name + " '" + std::string(trim(field)) + "'");
    return v;
  }

  template <class Int>
  Int integer(std::string_view field, const char* name) const {
    Int v{};
    if (!parse_int(field, v)) error(std::string("bad ") + name + " '" + std::string(trim(field)) + "'");
    return v;
  }

  void expect_fields(const std::vector<std::string_view>& f, std::size_t n) const {
    if (f.size() != n) error("expected " + std::to_string(n) + " fields, got " + std::to_string(f.size()));
  }

 private:
  std::istream& in_;
  std::string what_;
  std::string header_;
  std::string buf_;
  std::size_t line_ = 0;
};

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "cannot open " + path);
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::data, "cannot write " + path);
  return out;
}

/// Reads a one-column CSV of strictly increasing times.
inline std::vector<double> read_time_column(std::istream& in, const std::string& what, std::string_view header,
                                            bool strictly_increasing) {
  CsvReader r(in, what, header);
  std::vector<double> out;
  std::vector<std::string_view> f;
  while (r.next(f)) {
    r.expect_fields(f, 1);
    const double v = r.number(f[0], std::string(header).c_str());
    if (strictly_increasing && !out.empty() && !(v > out.back())) r.error("times must be strictly increasing");
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

// --- ECG: t_sec,mv -----------------------------------------------------------

inline EcgSeries read_ecg_csv(std::istream& in) {
  detail::CsvReader r(in, "ecg", "t_sec,mv");
  std::vector<double> t;
  EcgSeries ecg;
  std::vector<std::string_view> f;
  while (r.next(f)) {
    r.expect_fields(f, 2);
    const double ts = r.number(f[0], "t_sec");
    if (!t.empty() && !(ts > t.back())) r.error("t_sec must be strictly increasing");
    t.push_back(ts);
    ecg.samples.push_back(r.number(f[1], "mv"));
  }
  if (t.size() < 2) fail(ErrorKind::data, "ecg: need at least two samples");
  ecg.start_time = t.front();
  ecg.sample_rate = static_cast<double>(t.size() - 1) / (t.back() - t.front());
  return ecg;
}

inline void write_ecg_csv(std::ostream& out, const EcgSeries& ecg) {
  out << "t_sec,mv\n";
  for (std::size_t i = 0; i < ecg.samples.size(); ++i)
    out << format_number(ecg.time_of(i)) << ',' << format_number(ecg.samples[i]) << '\n';
}

// --- beats: beat_time_sec ------------------------------------------------------

inline std::vector<double> read_beats_csv(std::istream& in) {
  return detail::read_time_column(in, "beats", "beat_time_sec", true);
}

inline void write_beats_csv(std::ostream& out, std::span<const double> beat_times) {
  out << "beat_time_sec\n";
  for (double t : beat_times) out << format_number(t) << '\n';
}

// --- events: onset_sec ---------------------------------------------------------

inline std::vector<double> read_events_csv(std::istream& in) {
  return detail::read_time_column(in, "events", "onset_sec", true);
}

inline void write_events_csv(std::ostream& out, std::span<const double> onsets) {
  out << "onset_sec\n";
  for (double t : onsets) out << format_number(t) << '\n';
}

// --- drift intervals: start_sec,end_sec ----------------------------------------

inline std::vector<std::pair<double, double>> read_intervals_csv(std::istream& in) {
  detail::CsvReader r(in, "intervals", "start_sec,end_sec");
  std::vector<std::pair<double, double>> out;
  std::vector<std::string_view> f;
  while (r.next(f)) {
    r.expect_fields(f, 2);
    const double a = r.number(f[0], "start_sec");
    const double b = r.number(f[1], "end_sec");
    if (b < a) r.error("interval ends before it starts");
    out.emplace_back(a, b);
  }
  return out;
}

inline void write_intervals_csv(std::ostream& out, std::span<const std::pair<double, double>> iv) {
  out << "start_sec,end_sec\n";
  for (const auto& [a, b] : iv) out << format_number(a) << ',' << format_number(b) << '\n';
}

// --- alarm log: time_sec,score,window_id ---------------------------------------

inline std::vector<AlarmEvent> read_alarms_csv(std::istream& in) {
  detail::CsvReader r(in, "alarms", "time_sec,score,window_id");
  std::vector<AlarmEvent> out;
  std::vector<std::string_view> f;
  while (r.next(f)) {
    r.expect_fields(f, 3);
    AlarmEvent a;
    a.time = r.number(f[0], "time_sec");
    a.score = r.number(f[1], "score");
    a.window_id = r.integer<std::size_t>(f[2], "window_id");
    out.push_back(a);
  }
  return out;
}

inline void write_alarms_csv(std::ostream& out, std::span<const AlarmEvent> alarms) {
  out << "time_sec,score,window_id\n";
  for (const auto& a : alarms)
    out << format_number(a.time) << ',' << format_number(a.score) << ',' << a.window_id << '\n';
}

// --- per-window detection log --------------------------------------------------

/// One streamed window as logged by detection.
struct WindowLogRow {
  std::size_t window_id = 0;
  double time = 0.0;  // end time of the window
  double score = 0.0;
  bool alarm = false;
  std::int64_t macro_id = kOutlier;
  std::uint64_t micro_id = 0;
  bool abnormal = false;
  double recon_error = 0.0;
  bool recon_alarm = false;
};

inline constexpr std::string_view kWindowLogHeader =
    "window_id,time_sec,score,alarm,macro_id,micro_id,abnormal,recon_error,recon_alarm";

inline std::vector<WindowLogRow> read_window_log_csv(std::istream& in) {
  detail::CsvReader r(in, "windows", kWindowLogHeader);
  std::vector<WindowLogRow> out;
  std::vector<std::string_view> f;
  auto flag = [&](std::string_view s, const char* name) {
    const int v = r.integer<int>(s, name);
    if (v != 0 && v != 1) r.error(std::string("bad ") + name + " flag");
    return v == 1;
  };
  while (r.next(f)) {
    r.expect_fields(f, 9);
    WindowLogRow w;
    w.window_id = r.integer<std::size_t>(f[0], "window_id");
    w.time = r.number(f[1], "time_sec");
    w.score = r.number(f[2], "score");
    w.alarm = flag(f[3], "alarm");
    w.macro_id = r.integer<std::int64_t>(f[4], "macro_id");
    w.micro_id = r.integer<std::uint64_t>(f[5], "micro_id");
    w.abnormal = flag(f[6], "abnormal");
    w.recon_error = r.number(f[7], "recon_error");
    w.recon_alarm = flag(f[8], "recon_alarm");
    if (!out.empty() && w.time < out.back().time) r.error("windows must be in time order");
    out.push_back(w);
  }
  return out;
}

inline void write_window_log_csv(std::ostream& out, std::span<const WindowLogRow> rows) {
  out << kWindowLogHeader << '\n';
  for (const auto& w : rows)
    out << w.window_id << ',' << format_number(w.time) << ',' << format_number(w.score) << ','
        << (w.alarm ? 1 : 0) << ',' << w.macro_id << ',' << w.micro_id << ',' << (w.abnormal ? 1 : 0) << ','
        << format_number(w.recon_error) << ',' << (w.recon_alarm ? 1 : 0) << '\n';
}

// --- scored table: time_sec,score,label ----------------------------------------

inline void write_scores_csv(std::ostream& out, std::span<const ScoredWindow> windows,
                             std::span<const Region> labels) {
  if (windows.size() != labels.size()) fail(ErrorKind::invalid_argument, "windows and labels disagree");
  out << "time_sec,score,label\n";
  for (std::size_t i = 0; i < windows.size(); ++i)
    out << format_number(windows[i].time) << ',' << format_number(windows[i].score) << ','
        << to_string(labels[i]) << '\n';
}

// --- cluster state: micro_id,kind,weight,cx_0..cx_{d-1},radius,macro_id ---------

inline std::string cluster_state_header(std::size_t dim) {
  std::string h = "micro_id,kind,weight";
  for (std::size_t i = 0; i < dim; ++i) h += ",cx_" + std::to_string(i);
  return h + ",radius,macro_id";
}

inline void write_cluster_state_csv(std::ostream& out, std::span<const SnapshotRow> rows, std::size_t dim) {
  out << cluster_state_header(dim) << '\n';
  for (const auto& r : rows) {
    if (static_cast<std::size_t>(r.center.size()) != dim) fail(ErrorKind::invalid_argument, "center dimension");
    out << r.micro_id << ',' << to_string(r.kind) << ',' << format_number(r.weight);
    for (Eigen::Index i = 0; i < r.center.size(); ++i) out << ',' << format_number(r.center(i));
    out << ',' << format_number(r.radius) << ',' << r.macro_id << '\n';
  }
}

/// The dimension is taken from the header.
inline std::vector<SnapshotRow> read_cluster_state_csv(std::istream& in) {
  detail::CsvReader r(in, "clusters");
  const auto cols = detail::split_fields(r.header());
  if (cols.size() < 5) detail::parse_fail("clusters", 1, "malformed header");
  const std::size_t dim = cols.size() - 5;
  r.expect_header(cluster_state_header(dim));
  std::vector<SnapshotRow> out;
  std::vector<std::string_view> f;
  while (r.next(f)) {
    r.expect_fields(f, dim + 5);
    SnapshotRow row;
    row.micro_id = r.integer<std::uint64_t>(f[0], "micro_id");
    const auto kind = detail::trim(f[1]);
    if (kind == "potential") row.kind = MicroKind::potential;
    else if (kind == "outlier") row.kind = MicroKind::outlier;
    else r.error("bad kind '" + std::string(kind) + "'");
    row.weight = r.number(f[2], "weight");
    row.center.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) row.center(static_cast<Eigen::Index>(i)) = r.number(f[3 + i], "cx");
    row.radius = r.number(f[3 + dim], "radius");
    row.macro_id = r.integer<std::int64_t>(f[4 + dim], "macro_id");
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace prodrome
