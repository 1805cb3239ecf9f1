#pragma once

#include <string>
#include <vector>

#include "atomsense/config.hpp"
#include "atomsense/hybrid_kf.hpp"
#include "atomsense/riccati.hpp"
#include "atomsense/simulator.hpp"

namespace atomsense {

/// Filter pass over one observation record, with lab-frame waveform
/// estimates attached (rotating-frame beliefs are rotated back per step).
struct FilterRunOutput {
  std::vector<FilterStep> steps;
  std::vector<double> e_hat;  // waveform estimate per step
  std::vector<double> e_var;  // its predicted variance per step
};

FilterRunOutput run_sensor_filter(const SensorParams& params, Variant variant,
                                  const std::vector<double>& z,
                                  int poly_order = 2);

/// Steady state of the (time-invariant rotating-frame form of the) variant.
SteadyState sensor_steady_state(const SensorParams& params, Variant variant,
                                double tol = 1e-12,
                                DareMethod method = DareMethod::FixedPoint,
                                int poly_order = 2);

void write_trajectory_csv(const std::string& path, const Trajectory& traj);
void write_filter_csv(const std::string& path, const FilterRunOutput& run);

/// Subcommand entry points; return process exit codes
/// (0 pass, 1 threshold failure, 2 usage/config error).
int cmd_simulate(const ExperimentConfig& cfg);
int cmd_filter(const ExperimentConfig& cfg, const std::string& observations_csv);
int cmd_steady_state(const ExperimentConfig& cfg, const Config& raw,
                     bool json_to_stdout);
int cmd_spectroscopy(const ExperimentConfig& cfg, const Config& raw,
                     const std::string& input_csv, double band_lo_hz,
                     double band_hi_hz, bool json_to_stdout);
int cmd_validate(const ExperimentConfig& cfg, const std::string& trajectory_csv,
                 const std::string& filter_csv, bool json_to_stdout);
int cmd_experiment_ou(const ExperimentConfig& cfg);
int cmd_experiment_unknown(const ExperimentConfig& cfg);

}  // namespace atomsense
