#pragma once

#include <tuple>

#include "atomsense/hybrid_kf.hpp"
#include "atomsense/linear_model.hpp"
#include "atomsense/spectroscopy.hpp"

namespace atomsense {

/// Physical and statistical constants of the spin-quadrature sensor model.
/// State ordering everywhere: [J_y, J_z | q, p | q', p' | q'', p''].
struct SensorParams {
  double omega_L = 2.0 * M_PI * 1.0e4;  // Larmor [rad/s]
  double T2 = 8.744777092961283e-4;     // coherence time [s]
  double g_P = 0.0;                     // pump coupling [spin/s per quad unit]
  double omega_P = 2.0 * M_PI * 1.0e4;  // pump carrier [rad/s]
  double g_D = 0.0;                     // transduction [A per spin unit]
  double Q_y = 0.0, Q_z = 0.0;          // spin noise rates [spin^2/s]
  double Q_q = 0.0, Q_p = 0.0;          // quadrature noise rates [quad^2/s]
  double kappa_q = 0.0, kappa_p = 0.0;  // OU decay rates [1/s]
  double R = 0.0;                       // shot-noise PSD [A^2/Hz]
  double delta = 5.0e-6;                // sampling period [s]
};

void validate(const SensorParams& p);

enum class Variant { KnownOU, RotatingFrame, WienerProcess, PolynomialL2 };

/// Assemble the sensor state-space model for the chosen variant.
/// KnownOU / WienerProcess / PolynomialL2 carry the time-varying pump
/// coupling g_P cos/sin(omega_P t); RotatingFrame is time-invariant.
/// `poly_order` is the highest tracked derivative of the polynomial model.
LinearModel build_model(const SensorParams& p, Variant variant,
                        int poly_order = 2);

/// Constant rotating-frame generator equivalent to the chosen variant
/// (exists whenever the per-pair quadrature noise is isotropic).
Mat rotating_frame_generator(const SensorParams& p, Variant variant,
                             int poly_order = 2);

enum class FrameDirection { LabToRotating, RotatingToLab };

/// Block rotation I_(J) (+) R_(omega_P t) applied to a state vector: the spin
/// pair is untouched, every quadrature-derivative pair rotates.
Vec to_rotating_frame(const Vec& x, double t, double omega_P,
                      FrameDirection direction);

/// Congruence transform of a covariance by the same block rotation.
Mat to_rotating_frame(const Mat& cov, double t, double omega_P,
                      FrameDirection direction);

/// Lab constants behind the transduction formula (cgs lengths, SI power).
struct PhysicsConstants {
  double probe_power = 500e-6;     // W
  double responsivity = 0.59;      // A/W
  double r_e = 2.82e-13;           // cm
  double f_osc = 0.34;             // D1 oscillator strength
  double A_eff = 0.016;            // cm^2
  double detuning = 60e9;          // Hz, nu - nu'_alpha
  double linewidth_fwhm = 4.8e9;   // Hz, pressure-broadened D1 FWHM
  double tia_gain = 1.0e6;         // V/A
  double n_density = 4.5e12;       // cm^-3
  double cell_length = 3.0;        // cm
};

void validate(const PhysicsConstants& c);

/// g_D = 2 Re P (c r_e f_osc / A_eff) / detuning  [A per spin unit].
double faraday_transduction(const PhysicsConstants& c);

/// Hyperfine coupling with the Lorentzian line profile retained:
/// g = (c r_e f_osc / A_eff) * detuning / (detuning^2 + (FWHM/2)^2).
double hyperfine_coupling(const PhysicsConstants& c);

/// Far-detuned Faraday rotation angle for a collective spin J_z [rad].
double faraday_rotation_angle(const PhysicsConstants& c, double J_z);

/// Number of probed atoms n * A_eff * L.
double atom_number(const PhysicsConstants& c);

/// Spin-noise and shot-noise rates from a fitted spectrum:
/// g_D^2 Q_y = g_D^2 Q_z = 2 S_at / T2 and R = S_ph.
std::tuple<double, double, double> spin_noise_rates(const PsdFit& fit,
                                                    double g_D);

/// Scalar waveform estimate E_hat = g_P (q cos + p sin)(omega_P t) and its
/// variance from the (q, p) covariance block of a lab-frame belief.
std::pair<double, double> waveform_estimate(const GaussianBelief& belief,
                                            const SensorParams& p, double t);

}  // namespace atomsense
