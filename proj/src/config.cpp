#include "atomsense/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace atomsense {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

[[noreturn]] void missing(const std::string& origin, const std::string& section,
                          const std::string& key) {
  throw ConfigError(origin + ": missing key '" + key + "' in section [" +
                    section + "]");
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(line_no) +
                          ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    c.sections_[section][key] = value;
  }
  return c;
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string Config::get_string(const std::string& section,
                               const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) missing(origin_, section, key);
  const auto k = s->second.find(key);
  if (k == s->second.end()) missing(origin_, section, key);
  return k->second;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  const std::string v = get_string(section, key);
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' is not a number: " + v);
  }
  if (pos != v.size()) {
    throw ConfigError(origin_ + ": key '" + key + "' is not a number: " + v);
  }
  return out;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

long Config::get_int(const std::string& section, const std::string& key) const {
  const double v = get_double(section, key);
  const long out = static_cast<long>(v);
  if (static_cast<double>(out) != v) {
    throw ConfigError(origin_ + ": key '" + key + "' is not an integer");
  }
  return out;
}

long Config::get_int(const std::string& section, const std::string& key,
                     long fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = lower(get_string(section, key));
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(origin_ + ": key '" + key + "' is not a boolean: " + v);
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
  sections_[section][key] = value;
}

Variant parse_variant(const std::string& name) {
  const std::string v = lower(name);
  if (v == "knownou") return Variant::KnownOU;
  if (v == "rotatingframe") return Variant::RotatingFrame;
  if (v == "wienerprocess") return Variant::WienerProcess;
  if (v == "polynomiall2" || v == "polynomial") return Variant::PolynomialL2;
  throw ConfigError("unknown variant: " + name);
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::KnownOU: return "knownou";
    case Variant::RotatingFrame: return "rotatingframe";
    case Variant::WienerProcess: return "wienerprocess";
    case Variant::PolynomialL2: return "polynomiall2";
  }
  return "?";
}

namespace {

WaveformSpec waveform_from_config(const Config& c) {
  WaveformSpec spec;
  const std::string kind = c.get_string("waveform", "kind", "ou");
  if (kind == "ou") {
    spec.kind = WaveformSpec::Kind::OU;
    return spec;
  }
  if (kind == "stepped_sine") {
    spec.kind = WaveformSpec::Kind::SteppedSine;
  } else if (kind == "piecewise_constant") {
    spec.kind = WaveformSpec::Kind::PiecewiseConstant;
  } else {
    throw ConfigError("unknown waveform kind: " + kind);
  }
  spec.additive_noise_rate = c.get_double("waveform", "additive_noise_rate", 0.0);
  // segments = A:f_hz:phase:duration | A:f_hz:phase:duration | ...
  const std::string segs = c.get_string("waveform", "segments");
  std::istringstream in(segs);
  std::string item;
  while (std::getline(in, item, '|')) {
    std::istringstream fields(item);
    std::string f;
    std::vector<double> vals;
    while (std::getline(fields, f, ':')) {
      vals.push_back(std::stod(f));
    }
    if (vals.size() != 4) {
      throw ConfigError("waveform segment needs amplitude:freq_hz:phase:duration");
    }
    spec.segments.push_back({vals[0], vals[1], vals[2], vals[3]});
  }
  return spec;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_config(const Config& c) {
  ExperimentConfig e;
  SensorParams& p = e.sensor;
  p.omega_L = 2.0 * M_PI * c.get_double("sensor", "omega_L_hz");
  p.T2 = c.get_double("sensor", "t2_s");
  p.g_P = c.get_double("sensor", "g_p");
  p.omega_P = 2.0 * M_PI * c.get_double("sensor", "omega_p_hz");
  p.g_D = c.get_double("sensor", "g_d");
  p.Q_y = c.get_double("sensor", "q_y");
  p.Q_z = c.get_double("sensor", "q_z");
  p.Q_q = c.get_double("sensor", "q_quad", 0.0);
  p.Q_p = c.get_double("sensor", "q_quad", 0.0);
  p.kappa_q = c.get_double("sensor", "kappa", 0.0);
  p.kappa_p = c.get_double("sensor", "kappa", 0.0);
  p.R = c.get_double("sensor", "r_psd");
  p.delta = c.get_double("sensor", "delta_s");
  e.variant = parse_variant(c.get_string("sensor", "variant", "rotatingframe"));
  e.poly_order = static_cast<int>(c.get_int("sensor", "poly_order", 2));

  e.waveform = waveform_from_config(c);
  e.n_steps = static_cast<int>(c.get_int("run", "n_steps", 3000));
  e.n_runs = static_cast<int>(c.get_int("run", "n_runs", 1));
  e.seed = static_cast<std::uint64_t>(c.get_int("run", "seed", 1));
  e.output_dir = c.get_string("run", "output_dir", ".");

  e.report.coverage_lo = c.get_double("report", "coverage_lo", 0.92);
  e.report.coverage_hi = c.get_double("report", "coverage_hi", 0.97);
  e.report.nis_lo = c.get_double("report", "nis_lo", 0.9);
  e.report.nis_hi = c.get_double("report", "nis_hi", 1.1);
  e.report.transient_t2_multiples =
      c.get_double("report", "transient_t2_multiples", 5.0);
  e.report.table_window_s = c.get_double("report", "table_window_s", 0.015);
  e.report.spectrogram = c.get_bool("report", "spectrogram", false);
  return e;
}

int worker_count(int runs) {
  int cap = static_cast<int>(std::thread::hardware_concurrency());
  if (cap < 1) cap = 1;
  if (const char* env = std::getenv("KALMAN_ATOMSENSE_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) cap = v;
  }
  return std::min(cap, std::max(runs, 1));
}

}  // namespace atomsense
