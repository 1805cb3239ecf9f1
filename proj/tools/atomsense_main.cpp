#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include "atomsense/experiments.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  long seed = -1;
  int runs = -1;
  bool json = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* opt = cmd->add_option("--config", args.config_path, "config file (TOML-style sections)");
  if (config_required) opt->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "override RNG seed");
  cmd->add_option("--runs", args.runs, "override replicate count");
  cmd->add_flag("--json", args.json, "print the report JSON to stdout");
}

atomsense::ExperimentConfig load(const CommonArgs& args, atomsense::Config* raw_out) {
  atomsense::Config raw = atomsense::Config::parse_file(args.config_path);
  atomsense::ExperimentConfig cfg = atomsense::ExperimentConfig::from_config(raw);
  if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  if (args.runs >= 1) cfg.n_runs = args.runs;
  if (raw_out) *raw_out = raw;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"atomsense: hybrid Kalman filtering for a simulated "
               "Faraday-rotation atomic sensor"};
  app.require_subcommand(1);

  CommonArgs sim_args, filt_args, ss_args, spec_args, val_args, ou_args, unk_args;
  std::string filter_input, spectro_input, val_traj, val_filter, band;

  auto* sim = app.add_subcommand("simulate", "generate a ground-truth trajectory CSV");
  add_common(sim, sim_args);

  auto* filt = app.add_subcommand("filter", "run the configured filter over an observation CSV");
  add_common(filt, filt_args);
  filt->add_option("--input", filter_input, "observation CSV with columns t,z")->required();

  auto* ss = app.add_subcommand("steady-state", "solve the steady-state Riccati equations");
  add_common(ss, ss_args);

  auto* spec = app.add_subcommand("spectroscopy", "PSD estimate and Lorentzian fit of a signal-free record");
  add_common(spec, spec_args);
  spec->add_option("--input", spectro_input, "samples CSV (column z or first column)")->required();
  spec->add_option("--band", band, "fit band in Hz, lo:hi")->required();

  auto* val = app.add_subcommand("validate", "error statistics for a trajectory/filter CSV pair");
  add_common(val, val_args);
  val->add_option("--trajectory", val_traj, "trajectory CSV")->required();
  val->add_option("--filter", val_filter, "filter CSV")->required();

  auto* ou = app.add_subcommand("experiment-ou", "known-OU waveform tracking experiment");
  add_common(ou, ou_args);

  auto* unk = app.add_subcommand("experiment-unknown",
                                 "unknown-waveform experiment: Wiener-process vs polynomial model");
  add_common(unk, unk_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return atomsense::cmd_simulate(load(sim_args, nullptr));
    if (filt->parsed()) return atomsense::cmd_filter(load(filt_args, nullptr), filter_input);
    if (ss->parsed()) {
      atomsense::Config raw;
      auto cfg = load(ss_args, &raw);
      return atomsense::cmd_steady_state(cfg, raw, ss_args.json);
    }
    if (spec->parsed()) {
      atomsense::Config raw;
      auto cfg = load(spec_args, &raw);
      const auto colon = band.find(':');
      if (colon == std::string::npos) {
        std::fprintf(stderr, "--band expects lo:hi in Hz\n");
        return 2;
      }
      const double lo = std::stod(band.substr(0, colon));
      const double hi = std::stod(band.substr(colon + 1));
      return atomsense::cmd_spectroscopy(cfg, raw, spectro_input, lo, hi, spec_args.json);
    }
    if (val->parsed()) {
      return atomsense::cmd_validate(load(val_args, nullptr), val_traj, val_filter, val_args.json);
    }
    if (ou->parsed()) return atomsense::cmd_experiment_ou(load(ou_args, nullptr));
    if (unk->parsed()) return atomsense::cmd_experiment_unknown(load(unk_args, nullptr));
  } catch (const atomsense::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const atomsense::InvalidInput& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
