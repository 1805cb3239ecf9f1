#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "atomsense/sensor_models.hpp"
#include "atomsense/simulator.hpp"

namespace atomsense {

/// Thrown on malformed configuration input; message carries the line number.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Minimal sectioned key-value file: `[section]` headers, `key = value`
/// entries, `#` comments. Values stay strings until queried.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text,
                             const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  long get_int(const std::string& section, const std::string& key) const;
  long get_int(const std::string& section, const std::string& key,
               long fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;

  void set(const std::string& section, const std::string& key,
           const std::string& value);

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string origin_;
};

/// Acceptance-style thresholds applied by the experiment commands.
struct ReportOptions {
  double coverage_lo = 0.92;
  double coverage_hi = 0.97;
  double nis_lo = 0.9;
  double nis_hi = 1.1;
  double transient_t2_multiples = 5.0;  // warmup excluded from reports
  double table_window_s = 0.015;        // averaging window for error tables
  bool spectrogram = false;
};

/// Everything one experiment run needs, assembled from a config file plus
/// command-line overrides.
struct ExperimentConfig {
  SensorParams sensor;
  Variant variant = Variant::RotatingFrame;
  int poly_order = 2;
  WaveformSpec waveform;
  int n_steps = 3000;
  int n_runs = 1;
  std::uint64_t seed = 1;
  std::string output_dir = ".";
  ReportOptions report;

  static ExperimentConfig from_config(const Config& c);
};

Variant parse_variant(const std::string& name);
const char* variant_name(Variant v);

/// Worker cap for replicate fan-out (KALMAN_ATOMSENSE_THREADS, default
/// hardware concurrency).
int worker_count(int runs);

}  // namespace atomsense
