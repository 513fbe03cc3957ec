#pragma once

// Trained-artifact directory:
//   model.bin      auto-encoder weights (see model_io.hpp)
//   scaler.json    per-channel mean / stddev
//   clusters.json  calibrated clustering state and the normal set C
//   manifest.json  config hash, training boundary, loss curve, baseline level

#include <Eigen/Core>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "prodrome/alarm.hpp"
#include "prodrome/denstream.hpp"
#include "prodrome/error.hpp"
#include "prodrome/model_io.hpp"
#include "prodrome/pipeline.hpp"
#include "prodrome/windows.hpp"

namespace prodrome {

using nlohmann::json;

inline constexpr int kArtifactVersion = 1;

namespace detail {

inline json vec_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Eigen::VectorXd json_to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::data, path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::data, "cannot write " + path.string());
  out << j.dump(1) << '\n';
}

}  // namespace detail

inline json scaler_to_json(const FeatureScaler& s) {
  std::vector<int> constant(s.constant.begin(), s.constant.end());
  return {{"mean", detail::vec_to_json(s.mean)}, {"stddev", detail::vec_to_json(s.stddev)}, {"constant", constant}};
}

inline FeatureScaler scaler_from_json(const json& j) {
  FeatureScaler s;
  s.mean = detail::json_to_vec(j.at("mean"));
  s.stddev = detail::json_to_vec(j.at("stddev"));
  for (int c : j.at("constant").get<std::vector<int>>()) s.constant.push_back(c != 0);
  if (s.stddev.size() != s.mean.size() || s.constant.size() != s.dim())
    fail(ErrorKind::data, "scaler: inconsistent dimensions");
  return s;
}

inline json calibration_to_json(const Calibration& cal) {
  const auto& st = cal.state;
  json micro = json::array();
  for (const auto& mc : st.micro_clusters())
    micro.push_back({{"id", mc.id},
                     {"kind", to_string(mc.kind)},
                     {"weight", mc.weight},
                     {"ls", detail::vec_to_json(mc.ls)},
                     {"ss", mc.ss},
                     {"t_create", mc.t_create},
                     {"t_last", mc.t_last}});
  const auto& p = st.params();
  return {{"params", {{"eps", p.eps}, {"mu", p.mu}, {"lambda", p.lambda}, {"beta", p.beta}}},
          {"next_id", st.next_id()},
          {"last_time", st.last_time()},
          {"started", st.started()},
          {"micro_clusters", micro},
          {"normal_ids", std::vector<std::int64_t>(cal.normal.ids.begin(), cal.normal.ids.end())},
          {"training_windows", cal.normal.training_windows},
          {"calibrated_at", cal.normal.calibrated_at}};
}

inline Calibration calibration_from_json(const json& j) {
  try {
    ClusterParams p;
    const auto& jp = j.at("params");
    p.eps = jp.at("eps").get<double>();
    p.mu = jp.at("mu").get<double>();
    p.lambda = jp.at("lambda").get<double>();
    p.beta = jp.at("beta").get<double>();
    std::vector<MicroCluster> clusters;
    for (const auto& m : j.at("micro_clusters")) {
      MicroCluster mc;
      mc.id = m.at("id").get<std::uint64_t>();
      const auto kind = m.at("kind").get<std::string>();
      if (kind != "potential" && kind != "outlier") fail(ErrorKind::data, "clusters: bad kind " + kind);
      mc.kind = kind == "potential" ? MicroKind::potential : MicroKind::outlier;
      mc.weight = m.at("weight").get<double>();
      mc.ls = detail::json_to_vec(m.at("ls"));
      mc.ss = m.at("ss").get<double>();
      mc.t_create = m.at("t_create").get<double>();
      mc.t_last = m.at("t_last").get<double>();
      clusters.push_back(std::move(mc));
    }
    Calibration cal{DenStream::restore(p, std::move(clusters), j.at("next_id").get<std::uint64_t>(),
                                       j.at("last_time").get<double>(), j.at("started").get<bool>()),
                    {}};
    for (auto id : j.at("normal_ids").get<std::vector<std::int64_t>>()) cal.normal.ids.insert(id);
    cal.normal.training_windows = j.at("training_windows").get<std::size_t>();
    cal.normal.calibrated_at = j.at("calibrated_at").get<double>();
    return cal;
  } catch (const json::exception& e) {
    fail(ErrorKind::data, std::string("clusters: ") + e.what());
  }
}

struct Manifest {
  int version = kArtifactVersion;
  std::string config_hash;
  double boundary = 0.0;
  std::size_t training_windows = 0;
  std::size_t excluded_windows = 0;
  std::vector<double> epoch_loss;
  double baseline_threshold = 0.0;
};

inline json manifest_to_json(const Manifest& m) {
  return {{"format", "prodrome-artifacts"},
          {"version", m.version},
          {"config_hash", m.config_hash},
          {"boundary", m.boundary},
          {"training_windows", m.training_windows},
          {"excluded_windows", m.excluded_windows},
          {"epoch_loss", m.epoch_loss},
          {"baseline_threshold", m.baseline_threshold}};
}

inline Manifest manifest_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "prodrome-artifacts")
      fail(ErrorKind::incompatible, "incompatible model: unknown format");
    Manifest m;
    m.version = j.at("version").get<int>();
    if (m.version != kArtifactVersion) fail(ErrorKind::incompatible, "incompatible model: version mismatch");
    m.config_hash = j.at("config_hash").get<std::string>();
    m.boundary = j.at("boundary").get<double>();
    m.training_windows = j.at("training_windows").get<std::size_t>();
    m.excluded_windows = j.at("excluded_windows").get<std::size_t>();
    m.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
    m.baseline_threshold = j.at("baseline_threshold").get<double>();
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::incompatible, std::string("incompatible model: ") + e.what());
  }
}

/// A trained pipeline plus the hash of the config that produced it.
struct ArtifactBundle {
  TrainedPipeline trained;
  Manifest manifest;
};

inline void save_artifacts(const std::filesystem::path& dir, const TrainedPipeline& tp,
                           const std::string& hash) {
  std::filesystem::create_directories(dir);
  save_model((dir / "model.bin").string(), tp.model);
  detail::write_json_file(dir / "scaler.json", scaler_to_json(tp.scaler));
  detail::write_json_file(dir / "clusters.json", calibration_to_json(tp.calibration));
  Manifest m;
  m.config_hash = hash;
  m.boundary = tp.boundary;
  m.training_windows = tp.training_windows;
  m.excluded_windows = tp.excluded_windows;
  m.epoch_loss = tp.epoch_loss;
  m.baseline_threshold = baseline_threshold(tp.training_errors);
  detail::write_json_file(dir / "manifest.json", manifest_to_json(m));
}

/// Loads an artifact directory. A hash other than `expected_hash` is refused
/// as incompatible unless `force` is set.
inline ArtifactBundle load_artifacts(const std::filesystem::path& dir, const std::string& expected_hash,
                                     bool force) {
  ArtifactBundle b{TrainedPipeline{ModelParams{}, FeatureScaler{}, Calibration{DenStream{}, {}}, 0.0, 0, 0, {}, {}}, {}};
  b.manifest = manifest_from_json(detail::read_json_file(dir / "manifest.json"));
  if (!force && b.manifest.config_hash != expected_hash)
    fail(ErrorKind::incompatible, "incompatible model: config hash " + b.manifest.config_hash +
                                      " does not match " + expected_hash + " (use --force to override)");
  b.trained.model = load_model((dir / "model.bin").string());
  b.trained.scaler = scaler_from_json(detail::read_json_file(dir / "scaler.json"));
  b.trained.calibration = calibration_from_json(detail::read_json_file(dir / "clusters.json"));
  b.trained.boundary = b.manifest.boundary;
  b.trained.training_windows = b.manifest.training_windows;
  b.trained.excluded_windows = b.manifest.excluded_windows;
  b.trained.epoch_loss = b.manifest.epoch_loss;
  if (b.trained.scaler.dim() != b.trained.model.d_in)
    fail(ErrorKind::incompatible, "incompatible model: scaler and model dimensions differ");
  return b;
}

}  // namespace prodrome
