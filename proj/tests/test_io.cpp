#include <gtest/gtest.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "prodrome/artifacts.hpp"
#include "prodrome/config.hpp"
#include "prodrome/csv.hpp"
#include "prodrome/svg.hpp"

using namespace prodrome;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("prodrome_io_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string error_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

Eigen::VectorXd on_circle(double angle, Eigen::Index d) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
  v(0) = std::cos(angle);
  v(1) = std::sin(angle);
  return v;
}

TrainedPipeline small_pipeline() {
  std::vector<Eigen::VectorXd> reps;
  for (int i = 0; i < 6; ++i) reps.push_back(on_circle(i < 3 ? 0.0 : 1.0, 4));
  TrainedPipeline tp{init_params(3, 4, 5), FeatureScaler{}, calibrate(reps, ClusterParams{}), 123.5, 6, 2,
                     {0.9, 0.5, 0.25}, {0.1, 0.2, 0.3}};
  tp.scaler.mean = Eigen::Vector3d(1.0, 2.0, 3.0);
  tp.scaler.stddev = Eigen::Vector3d(0.5, 1.0, 1.0);
  tp.scaler.constant = {false, true, false};
  return tp;
}

}  // namespace

TEST(Csv, NumbersRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, 12345.678901234567, -2.5e-300, 0.0}) {
    double back = 0.0;
    ASSERT_TRUE(detail::parse_double(format_number(v), back));
    EXPECT_EQ(back, v);
  }
}

TEST(Csv, BeatsRoundTrip) {
  const std::vector<double> t{0.0, 0.4123456789, 0.83, 1.2500000001};
  std::stringstream ss;
  write_beats_csv(ss, t);
  EXPECT_EQ(ss.str().substr(0, 14), "beat_time_sec\n");
  EXPECT_EQ(read_beats_csv(ss), t);
}

TEST(Csv, EventsAndIntervalsRoundTrip) {
  const std::vector<double> on{100.5, 2000.25};
  std::stringstream a;
  write_events_csv(a, on);
  EXPECT_EQ(read_events_csv(a), on);
  const std::vector<std::pair<double, double>> iv{{1.0, 2.0}, {10.5, 12.0}};
  std::stringstream b;
  write_intervals_csv(b, iv);
  EXPECT_EQ(read_intervals_csv(b), iv);
}

TEST(Csv, AlarmsRoundTrip) {
  const std::vector<AlarmEvent> al{{10.5, 0.6, 3}, {99.0, 1.0, 17}};
  std::stringstream ss;
  write_alarms_csv(ss, al);
  EXPECT_EQ(ss.str().substr(0, 24), "time_sec,score,window_id");
  const auto back = read_alarms_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].time, 99.0);
  EXPECT_EQ(back[1].score, 1.0);
  EXPECT_EQ(back[1].window_id, 17u);
}

TEST(Csv, WindowLogRoundTrip) {
  const std::vector<WindowLogRow> rows{{0, 10.0, 0.2, false, -1, 4, false, 0.03, false},
                                       {1, 35.5, 0.6, true, 7, 9, true, 1.75, true}};
  std::stringstream ss;
  write_window_log_csv(ss, rows);
  const auto back = read_window_log_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].macro_id, 7);
  EXPECT_EQ(back[0].macro_id, -1);
  EXPECT_TRUE(back[1].alarm);
  EXPECT_EQ(back[1].recon_error, 1.75);
  EXPECT_TRUE(back[1].recon_alarm);
}

TEST(Csv, EcgRoundTrip) {
  EcgSeries ecg;
  ecg.sample_rate = 250.0;
  for (int i = 0; i < 1000; ++i) ecg.samples.push_back(std::sin(0.01 * i));
  std::stringstream ss;
  write_ecg_csv(ss, ecg);
  const auto back = read_ecg_csv(ss);
  EXPECT_NEAR(back.sample_rate, 250.0, 1e-9);
  EXPECT_EQ(back.samples, ecg.samples);
}

TEST(Csv, ClusterStateRoundTrip) {
  DenStream s;
  for (int i = 0; i < 5; ++i) s.insert(on_circle(0.4 * (i % 2), 3), static_cast<double>(i));
  s.insert(on_circle(2.0, 3), 9.0);
  const auto rows = s.snapshot();
  std::stringstream ss;
  write_cluster_state_csv(ss, rows, 3);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "micro_id,kind,weight,cx_0,cx_1,cx_2,radius,macro_id");
  const auto back = read_cluster_state_csv(ss);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].micro_id, rows[i].micro_id);
    EXPECT_EQ(back[i].kind, rows[i].kind);
    EXPECT_EQ(back[i].center, rows[i].center);
    EXPECT_EQ(back[i].macro_id, rows[i].macro_id);
  }
}

TEST(Csv, ErrorsCarryLineNumbers) {
  std::stringstream a("beat_time_sec\n0.0\n0.5\n\nabc\n");
  EXPECT_EQ(error_of([&] { read_beats_csv(a); }), "beats: parse error at line 5: bad beat_time_sec 'abc'");
  std::stringstream b("beat_time_sec\n1.0\n0.5\n");
  EXPECT_EQ(error_of([&] { read_beats_csv(b); }), "beats: parse error at line 3: times must be strictly increasing");
  std::stringstream c("onset\n1\n");
  EXPECT_EQ(error_of([&] { read_events_csv(c); }), "events: parse error at line 1: expected header 'onset_sec'");
  std::stringstream d("time_sec,score,window_id\n1,0.5\n");
  EXPECT_EQ(error_of([&] { read_alarms_csv(d); }), "alarms: parse error at line 2: expected 3 fields, got 2");
  std::stringstream e("");
  EXPECT_EQ(error_of([&] { read_beats_csv(e); }), "beats: parse error at line 1: missing header");
}

TEST(Csv, ParseErrorsAreDataErrors) {
  std::stringstream a("beat_time_sec\nx\n");
  try {
    read_beats_csv(a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
  }
}

TEST(Config, ParseAndDump) {
  std::stringstream in("# comment\nwindow_len = 32\n  eps=0.02  # trailing\n\nsynth.drift = variance_ramp\nseed = 11\n");
  const auto cfg = parse_config(in);
  EXPECT_EQ(cfg.pipeline.window_len, 32u);
  EXPECT_DOUBLE_EQ(cfg.pipeline.cluster.eps, 0.02);
  EXPECT_EQ(cfg.synth.drift, DriftKind::variance_ramp);
  EXPECT_EQ(cfg.seed, 11u);
  EXPECT_EQ(cfg.pipeline.train.seed, 11u);
  EXPECT_EQ(cfg.synth.seed, 11u);
  std::stringstream again(dump_config(cfg));
  const auto back = parse_config(again);
  EXPECT_EQ(dump_config(back), dump_config(cfg));
  EXPECT_EQ(config_hash(back), config_hash(cfg));
}

TEST(Config, UnknownKeyRejected) {
  std::stringstream in("window_len = 32\nbogus = 1\n");
  try {
    parse_config(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    EXPECT_EQ(std::string(e.what()), "config line 2: unknown config key 'bogus'");
  }
}

TEST(Config, MalformedValues) {
  RunConfig cfg;
  EXPECT_THROW(apply_setting(cfg, "window_len", "-3"), Error);
  EXPECT_THROW(apply_setting(cfg, "eps", "abc"), Error);
  EXPECT_THROW(apply_setting(cfg, "synth.drift", "wobble"), Error);
  std::stringstream in("window_len 32\n");
  EXPECT_EQ(error_of([&] { parse_config(in); }), "config line 1: expected key = value");
}

TEST(Config, HashTracksArtifactSettings) {
  RunConfig a;
  const auto h = config_hash(a);
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(h.find_first_not_of("0123456789abcdef"), std::string::npos);
  EXPECT_EQ(config_hash(RunConfig{}), h);
  RunConfig b;
  apply_setting(b, "k", "7");
  apply_setting(b, "synth.noise", "0.5");
  EXPECT_EQ(config_hash(b), h);
  apply_setting(b, "eps", "0.02");
  EXPECT_NE(config_hash(b), h);
  RunConfig c;
  apply_setting(c, "seed", "8");
  EXPECT_NE(config_hash(c), h);
}

TEST(Artifacts, RoundTrip) {
  const auto dir = scratch("rt");
  const auto tp = small_pipeline();
  save_artifacts(dir, tp, "0123456789abcdef");
  for (const char* f : {"model.bin", "scaler.json", "clusters.json", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto b = load_artifacts(dir, "0123456789abcdef", false);
  EXPECT_EQ(b.trained.model, tp.model);
  EXPECT_EQ(b.trained.scaler.mean, tp.scaler.mean);
  EXPECT_EQ(b.trained.scaler.stddev, tp.scaler.stddev);
  EXPECT_EQ(b.trained.scaler.constant, tp.scaler.constant);
  EXPECT_EQ(b.trained.calibration.normal.ids, tp.calibration.normal.ids);
  EXPECT_EQ(b.trained.boundary, 123.5);
  EXPECT_EQ(b.trained.epoch_loss, tp.epoch_loss);
  EXPECT_NEAR(b.manifest.baseline_threshold, 0.2 + 3.0 * std::sqrt(2.0 / 300.0), 1e-12);
  const auto& m0 = tp.calibration.state.micro_clusters();
  const auto& m1 = b.trained.calibration.state.micro_clusters();
  ASSERT_EQ(m0.size(), m1.size());
  for (std::size_t i = 0; i < m0.size(); ++i) {
    EXPECT_EQ(m0[i].id, m1[i].id);
    EXPECT_EQ(m0[i].ls, m1[i].ls);
    EXPECT_EQ(m0[i].weight, m1[i].weight);
    EXPECT_EQ(m0[i].kind, m1[i].kind);
  }
  // Restored state keeps clustering where the saved one left off.
  auto s0 = tp.calibration.state;
  auto s1 = b.trained.calibration.state;
  const auto a0 = s0.insert(on_circle(2.0, 4), 10.0);
  const auto a1 = s1.insert(on_circle(2.0, 4), 10.0);
  EXPECT_EQ(a0.micro_id, a1.micro_id);
  fs::remove_all(dir);
}

TEST(Artifacts, HashMismatchNeedsForce) {
  const auto dir = scratch("hash");
  save_artifacts(dir, small_pipeline(), "aaaaaaaaaaaaaaaa");
  try {
    load_artifacts(dir, "bbbbbbbbbbbbbbbb", false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::incompatible);
    EXPECT_NE(std::string(e.what()).find("--force"), std::string::npos);
  }
  EXPECT_NO_THROW(load_artifacts(dir, "bbbbbbbbbbbbbbbb", true));
  fs::remove_all(dir);
}

TEST(Artifacts, VersionMismatch) {
  const auto dir = scratch("ver");
  save_artifacts(dir, small_pipeline(), "aaaaaaaaaaaaaaaa");
  auto j = detail::read_json_file(dir / "manifest.json");
  j["version"] = 99;
  detail::write_json_file(dir / "manifest.json", j);
  try {
    load_artifacts(dir, "aaaaaaaaaaaaaaaa", true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::incompatible);
  }
  fs::remove_all(dir);
}

TEST(Artifacts, MissingDirectory) {
  try {
    load_artifacts("/nonexistent/prodrome", "x", false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
  }
}

TEST(Artifacts, DimensionMismatch) {
  const auto dir = scratch("dim");
  auto tp = small_pipeline();
  tp.model = init_params(5, 4, 1);
  save_artifacts(dir, tp, "aaaaaaaaaaaaaaaa");
  try {
    load_artifacts(dir, "aaaaaaaaaaaaaaaa", false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::incompatible);
  }
  fs::remove_all(dir);
}

TEST(Svg, SweepChart) {
  std::vector<SweepPoint> pts;
  for (std::size_t k = 1; k <= 4; ++k) {
    SweepPoint p;
    p.k = k;
    p.report.recall = 1.0 - 0.1 * static_cast<double>(k);
    p.report.specificity = 0.5 + 0.1 * static_cast<double>(k);
    p.report.auc = 0.7;
    p.report.mean_lead_min = 1.5;
    pts.push_back(p);
  }
  const auto svg = sweep_svg(pts);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  for (const char* s : {"recall", "specificity", "AUC", "lead"}) EXPECT_NE(svg.find(s), std::string::npos) << s;
  EXPECT_EQ(sweep_svg(pts), svg);
}

TEST(Svg, Timeline) {
  const std::vector<TimelinePoint> pts{{100.0, 0}, {200.0, -1}, {850.0, 5}, {950.0, 5}};
  const std::vector<double> on{1000.0};
  const auto svg = timeline_svg(pts, on, 180.0);
  EXPECT_NE(svg.find("outlier"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  const auto empty = timeline_svg({}, {}, 180.0);
  EXPECT_NE(empty.find("</svg>"), std::string::npos);
}
