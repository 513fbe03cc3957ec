// prodrome: unsupervised early warning of bradycardia from heart-beat streams.
//
//   prodrome synth  --out-dir data
//   prodrome train  --beats data/beats.csv --events data/events.csv --out-dir model
//   prodrome detect --beats data/beats.csv --artifacts model --out-dir run
//   prodrome eval   --windows run/windows.csv --events data/events.csv --out-dir run
//   prodrome sweep  --beats data/beats.csv --events data/events.csv --artifacts model --out-dir sweep
//   prodrome plot   --windows run/windows.csv --events data/events.csv --out run/timeline.svg

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "prodrome/prodrome.hpp"

namespace {

using namespace prodrome;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::config:
    case ErrorKind::invalid_argument: return 2;
    case ErrorKind::incompatible: return 4;
    case ErrorKind::data:
    case ErrorKind::numeric: return 3;
  }
  return 3;
}

struct Common {
  std::optional<std::string> config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k, window_len, stride, d_hidden;
  std::optional<double> eps, mu, lambda;
  std::string out_dir = ".";
  bool force = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "key = value config file");
  app->add_option("--set", c.sets, "extra key=value override (repeatable)");
  app->add_option("--seed", c.seed, "run seed");
  app->add_option("--k", c.k, "confidence window size");
  app->add_option("--eps", c.eps, "micro-cluster radius bound");
  app->add_option("--mu", c.mu, "core weight");
  app->add_option("--lambda", c.lambda, "decay rate");
  app->add_option("--window-len", c.window_len, "beats per window");
  app->add_option("--stride", c.stride, "beats between window starts");
  app->add_option("--d-hidden", c.d_hidden, "auto-encoder hidden size");
  app->add_option("--out-dir", c.out_dir, "output directory");
  app->add_flag("--force", c.force, "accept artifacts trained under another config");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg;
  if (c.config) {
    std::ifstream in(*c.config);
    if (!in) fail(ErrorKind::config, "cannot open config " + *c.config);
    cfg = parse_config(in, cfg);
  }
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(ErrorKind::config, "--set expects key=value, got '" + s + "'");
    apply_setting(cfg, detail::trim(std::string_view(s).substr(0, eq)), std::string_view(s).substr(eq + 1));
  }
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.sync_seed();
  }
  if (c.k) cfg.pipeline.k = *c.k;
  if (c.eps) cfg.pipeline.cluster.eps = *c.eps;
  if (c.mu) cfg.pipeline.cluster.mu = *c.mu;
  if (c.lambda) cfg.pipeline.cluster.lambda = *c.lambda;
  if (c.window_len) cfg.pipeline.window_len = *c.window_len;
  if (c.stride) cfg.pipeline.stride = *c.stride;
  if (c.d_hidden) cfg.pipeline.d_hidden = *c.d_hidden;
  return cfg;
}

void add_inputs(CLI::App* app, InputPaths& in, bool with_events) {
  app->add_option("--beats", in.beats, "beat-time CSV (beat_time_sec)");
  app->add_option("--ecg", in.ecg, "ECG CSV (t_sec,mv)");
  if (with_events) app->add_option("--events", in.events, "event-onset CSV (onset_sec); derived when absent");
}

void print_report(const EvalReport& r) {
  std::cout << report_to_json(r).dump(1) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised early warning of bradycardia from heart-beat streams"};
  app.require_subcommand(1);
  Common common;
  InputPaths inputs;
  std::string artifacts = "artifacts", windows, out_svg = "timeline.svg";
  std::optional<std::string> events_path;
  std::vector<std::size_t> ks{1, 2, 3, 4, 5, 6, 7, 8};
  double ecg_rate = 0.0, ecg_snr = 20.0;
  bool baseline = false, show_config = false;

  auto* synth = app.add_subcommand("synth", "generate a synthetic beat stream with injected events");
  add_common(synth, common);
  synth->add_option("--ecg-rate", ecg_rate, "also write an ECG at this sample rate (Hz)");
  synth->add_option("--ecg-snr", ecg_snr, "ECG signal-to-noise ratio (dB)");

  auto* train = app.add_subcommand("train", "fit scaler, auto-encoder and normal clusters");
  add_common(train, common);
  add_inputs(train, inputs, true);

  auto* detect = app.add_subcommand("detect", "stream the test span and log alarms");
  add_common(detect, common);
  add_inputs(detect, inputs, false);
  detect->add_option("--artifacts", artifacts, "trained artifact directory");

  auto* eval = app.add_subcommand("eval", "score a detection log against event onsets");
  add_common(eval, common);
  eval->add_option("--windows", windows, "window log from detect")->required();
  eval->add_option("--events", events_path, "event-onset CSV")->required();
  eval->add_flag("--baseline", baseline, "score by reconstruction error instead");

  auto* sweep = app.add_subcommand("sweep", "evaluate a list of confidence-window sizes");
  add_common(sweep, common);
  add_inputs(sweep, inputs, true);
  sweep->add_option("--artifacts", artifacts, "trained artifact directory");
  sweep->add_option("--ks", ks, "confidence-window sizes")->delimiter(',');

  auto* plot = app.add_subcommand("plot", "cluster timeline SVG from a window log");
  add_common(plot, common);
  plot->add_option("--windows", windows, "window log from detect")->required();
  plot->add_option("--events", events_path, "event-onset CSV");
  plot->add_option("--out", out_svg, "output SVG path");

  app.add_flag("--show-config", show_config, "print the resolved configuration and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = resolve(common);
    if (show_config) {
      std::cout << dump_config(cfg) << "# hash " << config_hash(cfg) << '\n';
      return 0;
    }
    const fs::path out = common.out_dir;
    if (*synth) {
      const auto data = cmd_synth(cfg, out, ecg_rate, ecg_snr);
      std::cout << "beats " << data.beats.size() << ", events " << data.onsets.size() << " -> " << out.string()
                << '\n';
    } else if (*train) {
      const auto tp = cmd_train(cfg, inputs, out);
      std::cout << "trained on " << tp.training_windows << " windows (" << tp.excluded_windows
                << " excluded), loss " << tp.epoch_loss.front() << " -> " << tp.epoch_loss.back() << ", "
                << tp.calibration.normal.ids.size() << " normal clusters -> " << out.string() << '\n';
    } else if (*detect) {
      const auto run = cmd_detect(cfg, inputs, artifacts, out, common.force);
      std::cout << run.windows.size() << " windows, " << run.alarms.size() << " alarms -> " << out.string() << '\n';
    } else if (*eval) {
      print_report(cmd_eval(cfg, windows, *events_path, out, baseline));
    } else if (*sweep) {
      const auto points = cmd_sweep(cfg, inputs, artifacts, ks, out, common.force);
      for (const auto& p : points)
        std::cout << "k=" << p.k << " recall " << p.report.recall << " specificity "
                  << p.report.specificity.value_or(std::nan("")) << " auc " << p.report.auc.value_or(std::nan(""))
                  << '\n';
    } else if (*plot) {
      std::optional<fs::path> ev;
      if (events_path) ev = *events_path;
      cmd_plot_timeline(cfg, windows, ev, out_svg);
      std::cout << "wrote " << out_svg << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
