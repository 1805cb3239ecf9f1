#pragma once

#include <cstdint>
#include <vector>

#include "atomsense/sensor_models.hpp"

namespace atomsense {

/// One segment of a synthesized drive waveform:
/// q_bar(t) = amplitude * sin(2 pi freq_hz (t - t_start) + phase) over its
/// duration. freq_hz = 0 gives a constant level `amplitude * sin(phase)`.
struct WaveformSegment {
  double amplitude = 0.0;
  double freq_hz = 0.0;
  double phase = 0.0;
  double duration = 0.0;
};

/// Drive specification for the simulator. OU draws both quadratures from the
/// stationary mean-reverting process of the sensor parameters; SteppedSine
/// and PiecewiseConstant follow a deterministic q_bar(t) (p_bar = 0) with
/// additive quadrature noise of rate `additive_noise_rate`.
struct WaveformSpec {
  enum class Kind { OU, SteppedSine, PiecewiseConstant };
  Kind kind = Kind::OU;
  double additive_noise_rate = 0.0;  // [quad^2/s], non-OU kinds
  std::vector<WaveformSegment> segments;
};

/// Ground truth for one run on the grid t_k = k delta.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;          // [J_y, J_z, q, p]
  std::vector<double> observations; // z_k = g_D J_z + shot noise
  std::vector<double> waveform;     // E(t_k) = g_P (q cos + p sin)
  std::uint64_t seed = 0;
  SensorParams params;
};

/// Exact one-step simulation of the sensor SDE plus discrete shot noise.
/// The stochastic part is sampled with the model's own propagators
/// (x_k = Phi x_{k-1} + chol(Q_Delta) xi); deterministic drives superpose.
Trajectory simulate(const SensorParams& params, const WaveformSpec& spec,
                    int n_steps, std::uint64_t seed);

/// Deterministic component q_bar and its analytic derivative on the grid.
/// Throws InvalidInput if the segments do not cover n_steps * delta.
std::pair<std::vector<double>, std::vector<double>> synthesize_unknown_waveform(
    const WaveformSpec& spec, int n_steps, double delta);

/// Independent per-run seeds from a base seed (run 0 keeps the base).
std::vector<std::uint64_t> replicate(int runs, std::uint64_t base_seed);

}  // namespace atomsense
