#include "atomsense/spectroscopy.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace atomsense {

namespace {

std::vector<double> make_window(Window window, int len) {
  std::vector<double> w(len, 1.0);
  if (window == Window::Hann) {
    for (int j = 0; j < len; ++j) {
      w[j] = 0.5 * (1.0 - std::cos(2.0 * M_PI * j / len));
    }
  }
  return w;
}

// One windowed periodogram accumulated into `acc` (two-sided density on the
// non-negative bins).
void accumulate_periodogram(const double* data, const std::vector<double>& w,
                            double delta, Eigen::FFT<double>& fft,
                            std::vector<double>& acc) {
  const int len = static_cast<int>(w.size());
  double u = 0.0;
  for (double wj : w) u += wj * wj;
  u /= len;
  std::vector<double> buf(len);
  for (int j = 0; j < len; ++j) buf[j] = data[j] * w[j];
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, buf);
  const double norm = delta / (len * u);
  const int n_bins = len / 2 + 1;
  for (int k = 0; k < n_bins; ++k) {
    acc[k] += norm * std::norm(spec[k]);
  }
}

struct LorentzParams {
  double s_ph, s_at, gamma, omega0;
};

double model_at(const LorentzParams& p, double w) {
  const double u = w - p.omega0;
  const double g2 = p.gamma * p.gamma;
  return p.s_ph + p.s_at * g2 / (g2 + u * u);
}

}  // namespace

PsdEstimate estimate_psd(const std::vector<double>& samples, double delta,
                         int n_segments, Window window) {
  if (delta <= 0.0) throw InvalidInput("estimate_psd: delta must be > 0");
  if (n_segments < 2) throw InvalidInput("estimate_psd: need at least 2 segments");
  const int len = static_cast<int>(samples.size()) / n_segments;
  if (len < 16) {
    throw InvalidInput("estimate_psd: too few samples per segment");
  }
  const std::vector<double> w = make_window(window, len);
  Eigen::FFT<double> fft;
  const int n_bins = len / 2 + 1;
  std::vector<double> acc(n_bins, 0.0);
  for (int s = 0; s < n_segments; ++s) {
    accumulate_periodogram(samples.data() + static_cast<std::size_t>(s) * len,
                           w, delta, fft, acc);
  }
  PsdEstimate out;
  out.n_segments = n_segments;
  out.window = window;
  out.delta = delta;
  out.resolution_bw = 1.0 / (len * delta);
  out.freqs.resize(n_bins);
  out.power.resize(n_bins);
  for (int k = 0; k < n_bins; ++k) {
    out.freqs[k] = k / (len * delta);
    out.power[k] = acc[k] / n_segments;
  }
  return out;
}

double psd_variance_ratio(const PsdEstimate& psd,
                          const std::vector<double>& samples) {
  const double mean =
      std::accumulate(samples.begin(), samples.end(), 0.0) / samples.size();
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= samples.size();
  // two-sided density on the half axis: interior bins count twice
  double integral = 0.0;
  const int n = static_cast<int>(psd.power.size());
  for (int k = 0; k < n; ++k) {
    const double weight = (k == 0 || k == n - 1) ? 1.0 : 2.0;
    integral += weight * psd.power[k] * psd.resolution_bw;
  }
  return integral / var;
}

PsdFit fit_lorentzian(const PsdEstimate& psd, double f_lo_hz, double f_hi_hz) {
  std::vector<double> w_grid, p_grid;
  for (std::size_t i = 0; i < psd.freqs.size(); ++i) {
    if (psd.freqs[i] >= f_lo_hz && psd.freqs[i] <= f_hi_hz) {
      w_grid.push_back(2.0 * M_PI * psd.freqs[i]);
      p_grid.push_back(psd.power[i]);
    }
  }
  const int n = static_cast<int>(w_grid.size());
  if (n < 8) throw InvalidInput("fit_lorentzian: band holds too few bins");

  // Initial guesses: peak location, floor median, half-max width.
  const auto max_it = std::max_element(p_grid.begin(), p_grid.end());
  const int peak_idx = static_cast<int>(max_it - p_grid.begin());
  if (peak_idx == 0 || peak_idx == n - 1) {
    throw InvalidInput("fit_lorentzian: band has no interior maximum");
  }
  std::vector<double> sorted = p_grid;
  std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
  const double floor0 = sorted[n / 2];
  const double peak0 = std::max(*max_it - floor0, 1e-3 * floor0);
  const double half_level = floor0 + 0.5 * peak0;
  int lo = peak_idx, hi = peak_idx;
  while (lo > 0 && p_grid[lo] > half_level) --lo;
  while (hi < n - 1 && p_grid[hi] > half_level) ++hi;
  double gamma0 = 0.5 * (w_grid[hi] - w_grid[lo]);
  if (!(gamma0 > 0.0)) gamma0 = 0.05 * (w_grid[n - 1] - w_grid[0]);

  LorentzParams p{std::max(floor0, 1e-300), peak0, gamma0, w_grid[peak_idx]};

  // Damped Gauss-Newton on (log S_ph, log S_at, log gamma, omega0).
  auto cost = [&](const LorentzParams& q) {
    double c = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = model_at(q, w_grid[i]) - p_grid[i];
      c += r * r;
    }
    return c;
  };
  double lambda = 1e-3;
  double rss = cost(p);
  int it = 0;
  bool converged = false;
  Eigen::Matrix4d jtj_last = Eigen::Matrix4d::Zero();
  for (; it < 200; ++it) {
    Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
    Eigen::Vector4d jtr = Eigen::Vector4d::Zero();
    for (int i = 0; i < n; ++i) {
      const double u = w_grid[i] - p.omega0;
      const double g2 = p.gamma * p.gamma;
      const double den = g2 + u * u;
      const double lor = g2 / den;
      const double r = p.s_ph + p.s_at * lor - p_grid[i];
      Eigen::Vector4d jac;
      jac(0) = p.s_ph;                                          // d/d log S_ph
      jac(1) = p.s_at * lor;                                    // d/d log S_at
      jac(2) = p.s_at * 2.0 * g2 * u * u / (den * den);         // d/d log gamma
      jac(3) = p.s_at * g2 * 2.0 * u / (den * den);             // d/d omega0
      jtj += jac * jac.transpose();
      jtr += jac * r;
    }
    jtj_last = jtj;
    // relative-gradient convergence test
    const double grad_scale = jtr.cwiseAbs().maxCoeff() / std::max(rss, 1e-300);
    if (grad_scale < 1e-8) {
      converged = true;
      break;
    }
    bool stepped = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::Matrix4d damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal();
      const Eigen::Vector4d step = damped.ldlt().solve(-jtr);
      LorentzParams trial{p.s_ph * std::exp(step(0)), p.s_at * std::exp(step(1)),
                          p.gamma * std::exp(step(2)), p.omega0 + step(3)};
      const double trial_cost = cost(trial);
      if (std::isfinite(trial_cost) && trial_cost < rss) {
        p = trial;
        rss = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        break;
      }
      lambda *= 3.0;
    }
    if (!stepped) {
      converged = grad_scale < 1e-4;  // stalled at a flat minimum
      break;
    }
  }

  PsdFit fit;
  fit.S_ph = p.s_ph;
  fit.S_at = p.s_at;
  fit.T2 = 1.0 / p.gamma;
  fit.omega0 = p.omega0;
  fit.rss = rss;
  fit.iterations = it;
  const double dof = std::max(n - 4, 1);
  const Eigen::Matrix4d cov = jtj_last.ldlt().solve(
      Eigen::Matrix4d::Identity() * (rss / dof));
  fit.err_S_ph = p.s_ph * std::sqrt(std::max(cov(0, 0), 0.0));
  fit.err_S_at = p.s_at * std::sqrt(std::max(cov(1, 1), 0.0));
  fit.err_T2 = fit.T2 * std::sqrt(std::max(cov(2, 2), 0.0));
  fit.err_omega0 = std::sqrt(std::max(cov(3, 3), 0.0));
  if (!converged) {
    throw FitFailed("fit_lorentzian: no convergence", fit);
  }
  return fit;
}

Mat spectrogram(const std::vector<double>& samples, double delta,
                int window_len, int hop, std::vector<double>* frame_times,
                std::vector<double>* freqs_hz, Window window) {
  if (hop <= 0) throw InvalidInput("spectrogram: hop must be > 0");
  if (window_len < 16 ||
      window_len > static_cast<int>(samples.size())) {
    throw InvalidInput("spectrogram: window length out of range");
  }
  const std::vector<double> w = make_window(window, window_len);
  Eigen::FFT<double> fft;
  const int n_bins = window_len / 2 + 1;
  const int n_frames =
      1 + (static_cast<int>(samples.size()) - window_len) / hop;
  Mat out(n_bins, n_frames);
  if (frame_times) frame_times->resize(n_frames);
  if (freqs_hz) {
    freqs_hz->resize(n_bins);
    for (int k = 0; k < n_bins; ++k) (*freqs_hz)[k] = k / (window_len * delta);
  }
  std::vector<double> acc(n_bins);
  for (int f = 0; f < n_frames; ++f) {
    std::fill(acc.begin(), acc.end(), 0.0);
    accumulate_periodogram(samples.data() + static_cast<std::size_t>(f) * hop,
                           w, delta, fft, acc);
    for (int k = 0; k < n_bins; ++k) out(k, f) = acc[k];
    if (frame_times) {
      (*frame_times)[f] = (f * hop + 0.5 * window_len) * delta;
    }
  }
  return out;
}

}  // namespace atomsense
