#pragma once

#include <vector>

#include "atomsense/types.hpp"

namespace atomsense {

enum class Window { Hann, Rect };

/// Averaged-periodogram PSD estimate. `power` is the two-sided spectral
/// density reported on the non-negative frequency grid, in units of
/// [signal^2 / Hz]: discrete white noise of per-sample variance s^2 sampled
/// every delta seconds sits at the flat level s^2 * delta, and observation
/// noise of covariance R/delta maps back to the floor R.
struct PsdEstimate {
  std::vector<double> freqs;  // Hz, ascending from 0 to Nyquist
  std::vector<double> power;  // two-sided density per Hz
  int n_segments = 0;
  Window window = Window::Hann;
  double resolution_bw = 0.0;  // Hz
  double delta = 0.0;          // sampling period of the input [s]
};

/// Lorentzian-plus-floor fit of the spin-noise spectrum
///   S(w) = S_ph + S_at * (1/T2)^2 / ((1/T2)^2 + (w - w0)^2),
/// i.e. S_at is the atomic peak height above the shot floor, in the same
/// density units as S_ph.
struct PsdFit {
  double S_ph = 0.0;    // shot-noise floor [signal^2/Hz]
  double S_at = 0.0;    // atomic resonance peak height [signal^2/Hz]
  double T2 = 0.0;      // coherence time [s]
  double omega0 = 0.0;  // resonance [rad/s]
  double err_S_ph = 0.0;
  double err_S_at = 0.0;
  double err_T2 = 0.0;
  double err_omega0 = 0.0;
  double rss = 0.0;
  int iterations = 0;
};

/// Thrown when the Lorentzian fit does not converge; carries the last iterate.
struct FitFailed : std::runtime_error {
  PsdFit last;
  FitFailed(const std::string& msg, PsdFit iterate)
      : std::runtime_error(msg), last(iterate) {}
};

/// Welch-style averaged periodogram over `n_segments` non-overlapping
/// segments. Requires at least two segments of at least 16 samples.
PsdEstimate estimate_psd(const std::vector<double>& samples, double delta,
                         int n_segments, Window window = Window::Hann);

/// Damped Gauss-Newton fit of the 4-parameter spectrum model over
/// [f_lo_hz, f_hi_hz]. Positive parameters are fitted in log space.
PsdFit fit_lorentzian(const PsdEstimate& psd, double f_lo_hz, double f_hi_hz);

/// Short-time spectrum matrix: one windowed periodogram per hop. Rows are
/// frequency bins (same convention as estimate_psd), columns are frames.
Mat spectrogram(const std::vector<double>& samples, double delta,
                int window_len, int hop, std::vector<double>* frame_times,
                std::vector<double>* freqs_hz, Window window = Window::Hann);

/// Parseval-style check value: two-sided integral of the density divided by
/// the sample variance (close to 1 for a well-normalized estimate).
double psd_variance_ratio(const PsdEstimate& psd, const std::vector<double>& samples);

}  // namespace atomsense
