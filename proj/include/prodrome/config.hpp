#pragma once

// key = value run configuration. Unknown keys are rejected; the artifact
// hash covers every setting that shapes trained artifacts.

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "prodrome/csv.hpp"
#include "prodrome/error.hpp"
#include "prodrome/pipeline.hpp"
#include "prodrome/synth.hpp"

namespace prodrome {

struct RunConfig {
  PipelineConfig pipeline;
  SynthSpec synth;
  std::uint64_t seed = 7;

  RunConfig() { sync_seed(); }

  /// Propagates the run seed to the trainer and the generator.
  void sync_seed() {
    pipeline.train.seed = seed;
    synth.seed = seed;
  }

  void validate() const {
    pipeline.validate();
    synth.validate();
  }
};

namespace detail {

struct ConfigField {
  const char* key;
  std::variant<double*, std::size_t*, DriftKind*> target;
  bool hashed;  // shapes trained artifacts
};

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "seed is stored through a size_t field");

inline std::vector<ConfigField> config_fields(RunConfig& c) {
  auto& p = c.pipeline;
  auto& s = c.synth;
  return {
      {"seed", &c.seed, true},
      {"window_len", &p.window_len, true},
      {"stride", &p.stride, true},
      {"cwt.f_min", &p.cwt.f_min, true},
      {"cwt.f_max", &p.cwt.f_max, true},
      {"cwt.n_scales", &p.cwt.n_scales, true},
      {"cwt.omega0", &p.cwt.omega0, true},
      {"cwt.resample_rate", &p.cwt.resample_rate, true},
      {"cwt.history", &p.cwt.history, true},
      {"d_hidden", &p.d_hidden, true},
      {"train.learning_rate", &p.train.learning_rate, true},
      {"train.epochs", &p.train.epochs, true},
      {"train.batch_size", &p.train.batch_size, true},
      {"train.weight_decay", &p.train.weight_decay, true},
      {"train.clip_norm", &p.train.clip_norm, true},
      {"eps", &p.cluster.eps, true},
      {"mu", &p.cluster.mu, true},
      {"lambda", &p.cluster.lambda, true},
      {"beta", &p.cluster.beta, true},
      {"eval.pre_event_span", &p.eval.pre_event_span, true},
      {"eval.post_event_exclusion", &p.eval.post_event_exclusion, true},
      {"eval.train_fraction", &p.eval.train_fraction, true},
      {"hr_threshold", &p.hr_threshold, true},
      {"brady_min_beats", &p.brady_min_beats, true},
      {"k", &p.k, false},
      {"threshold", &p.threshold, false},
      {"synth.duration", &s.duration, false},
      {"synth.lead_in", &s.lead_in, false},
      {"synth.base_hr", &s.base_hr, false},
      {"synth.regime_dwell", &s.regime_dwell, false},
      {"synth.noise", &s.noise, false},
      {"synth.noise_corr", &s.noise_corr, false},
      {"synth.event_count", &s.event_count, false},
      {"synth.event_hr", &s.event_hr, false},
      {"synth.event_duration", &s.event_duration, false},
      {"synth.drift", &s.drift, false},
      {"synth.drift_lead", &s.drift_lead, false},
      {"synth.drift_magnitude", &s.drift_magnitude, false},
      {"synth.drift_frequency", &s.drift_frequency, false},
      {"synth.min_separation", &s.min_separation, false},
  };
}

inline std::string field_value(const ConfigField& f) {
  return std::visit(
      [](auto* ptr) -> std::string {
        using T = std::remove_pointer_t<decltype(ptr)>;
        if constexpr (std::is_same_v<T, DriftKind>) return to_string(*ptr);
        else return format_number(*ptr);
      },
      f.target);
}

}  // namespace detail

/// Sets one key from its text value. Throws a config error on unknown keys
/// or malformed values.
inline void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  for (auto& f : detail::config_fields(cfg)) {
    if (key != f.key) continue;
    const auto v = detail::trim(value);
    const bool ok = std::visit(
        [&](auto* ptr) {
          using T = std::remove_pointer_t<decltype(ptr)>;
          if constexpr (std::is_same_v<T, DriftKind>) {
            *ptr = parse_drift_kind(std::string(v));
            return true;
          } else if constexpr (std::is_same_v<T, double>) {
            return detail::parse_double(v, *ptr);
          } else {
            return detail::parse_int(v, *ptr);
          }
        },
        f.target);
    if (!ok) fail(ErrorKind::config, "bad value for " + std::string(key) + ": '" + std::string(v) + "'");
    if (key == "seed") cfg.sync_seed();
    return;
  }
  fail(ErrorKind::config, "unknown config key '" + std::string(key) + "'");
}

/// Reads `key = value` lines; '#' starts a comment.
inline RunConfig parse_config(std::istream& in, RunConfig base = {}) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::config, "config line " + std::to_string(n) + ": expected key = value");
    try {
      apply_setting(base, detail::trim(s.substr(0, eq)), s.substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorKind::config, "config line " + std::to_string(n) + ": " + e.what());
    }
  }
  return base;
}

/// Every key with its current value, one `key = value` per line.
inline std::string dump_config(const RunConfig& cfg) {
  RunConfig copy = cfg;
  std::string out;
  for (const auto& f : detail::config_fields(copy)) out += std::string(f.key) + " = " + detail::field_value(f) + "\n";
  return out;
}

/// FNV-1a 64 over the canonical text of the hashed settings, as 16 hex digits.
inline std::string config_hash(const RunConfig& cfg) {
  RunConfig copy = cfg;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : detail::config_fields(copy)) {
    if (!f.hashed) continue;
    for (char ch : std::string(f.key) + "=" + detail::field_value(f) + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace prodrome
