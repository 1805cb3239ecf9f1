#include "atomsense/simulator.hpp"

#include <cmath>
#include <memory>

#include "atomsense/linalg.hpp"
#include "atomsense/rng.hpp"

namespace atomsense {

namespace {

double segment_value(const WaveformSegment& s, WaveformSpec::Kind kind,
                     double u) {
  if (kind == WaveformSpec::Kind::PiecewiseConstant) return s.amplitude;
  if (s.freq_hz == 0.0) return s.amplitude * std::sin(s.phase);
  return s.amplitude * std::sin(2.0 * M_PI * s.freq_hz * u + s.phase);
}

double segment_slope(const WaveformSegment& s, WaveformSpec::Kind kind,
                     double u) {
  if (kind == WaveformSpec::Kind::PiecewiseConstant || s.freq_hz == 0.0) {
    return 0.0;
  }
  const double w = 2.0 * M_PI * s.freq_hz;
  return s.amplitude * w * std::cos(w * u + s.phase);
}

void check_segments(const std::vector<WaveformSegment>& segments,
                    double t_last) {
  if (segments.empty()) throw InvalidInput("waveform: no segments specified");
  double total = 0.0;
  for (const auto& s : segments) {
    if (s.duration <= 0.0) {
      throw InvalidInput("waveform: segment durations must be positive");
    }
    total += s.duration;
  }
  if (total + 1e-12 < t_last) {
    throw InvalidInput("waveform: segments do not cover the run duration");
  }
}

// Piecewise-analytic evaluation of the drive at an arbitrary time.
double drive_at(const std::vector<WaveformSegment>& segments,
                WaveformSpec::Kind kind, double t) {
  double seg_start = 0.0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const bool last = i + 1 == segments.size();
    if (t < seg_start + segments[i].duration || last) {
      return segment_value(segments[i], kind, t - seg_start);
    }
    seg_start += segments[i].duration;
  }
  return 0.0;
}

// Exact spin response to the deterministic drive entering dJ_z as
// g_P q_bar(t) cos(omega_P t) dt, stepped with a two-node Gauss quadrature of
// the smooth forcing integral.
class DeterministicSpinResponse {
 public:
  DeterministicSpinResponse(const SensorParams& p,
                            const std::vector<WaveformSegment>& segments,
                            WaveformSpec::Kind kind)
      : p_(p), segments_(segments), kind_(kind) {
    Mat a(2, 2);
    a << -1.0 / p.T2, p.omega_L, -p.omega_L, -1.0 / p.T2;
    phi_ = matrix_exponential(a, p.delta);
    static const double kOffset = std::sqrt(3.0) / 6.0;
    nodes_[0] = 0.5 - kOffset;
    nodes_[1] = 0.5 + kOffset;
    tails_[0] = matrix_exponential(a, (1.0 - nodes_[0]) * p.delta);
    tails_[1] = matrix_exponential(a, (1.0 - nodes_[1]) * p.delta);
    j_ = Eigen::Vector2d::Zero();
  }

  // advance from t to t + delta; returns the response at t + delta
  const Eigen::Vector2d& step(double t) {
    Eigen::Vector2d next = phi_ * j_;
    for (int i = 0; i < 2; ++i) {
      const double s = t + nodes_[i] * p_.delta;
      Eigen::Vector2d b(0.0, p_.g_P * drive_at(segments_, kind_, s) *
                                 std::cos(p_.omega_P * s));
      next += 0.5 * p_.delta * (tails_[i] * b);
    }
    j_ = next;
    return j_;
  }

 private:
  SensorParams p_;
  std::vector<WaveformSegment> segments_;
  WaveformSpec::Kind kind_;
  Mat phi_;
  double nodes_[2];
  Mat tails_[2];
  Eigen::Vector2d j_;
};

}  // namespace

Trajectory simulate(const SensorParams& params, const WaveformSpec& spec,
                    int n_steps, std::uint64_t seed) {
  if (n_steps < 1) throw InvalidInput("simulate: n_steps must be >= 1");
  validate(params);

  SensorParams p = params;
  const bool deterministic_drive = spec.kind != WaveformSpec::Kind::OU;
  if (deterministic_drive) {
    check_segments(spec.segments, (n_steps - 1) * p.delta);
    p.kappa_q = 0.0;
    p.kappa_p = 0.0;
    p.Q_q = spec.additive_noise_rate;
    p.Q_p = spec.additive_noise_rate;
  }
  const Variant variant =
      deterministic_drive ? Variant::WienerProcess : Variant::KnownOU;
  LinearModel model = build_model(p, variant);

  // Propagators repeat once the carrier phase wraps on the sampling grid.
  const int period = model.period_steps > 0 ? model.period_steps : 1;
  const bool periodic = model.period_steps > 0;
  std::vector<Mat> phis(period), chols(period);
  std::vector<bool> ready(period, false);

  CounterRng rng(seed);
  Trajectory traj;
  traj.seed = seed;
  traj.params = params;
  traj.times.resize(n_steps);
  traj.states.resize(n_steps);
  traj.observations.resize(n_steps);
  traj.waveform.resize(n_steps);

  // Initial state: spins stationary; quadratures stationary for OU drives,
  // zero otherwise (the deterministic component is superposed below).
  Vec x = Vec::Zero(4);
  {
    Mat a(2, 2);
    a << -1.0 / p.T2, p.omega_L, -p.omega_L, -1.0 / p.T2;
    Mat qs = Mat::Zero(2, 2);
    qs(0, 0) = p.Q_y;
    qs(1, 1) = p.Q_z;
    const Mat l_spin = psd_sqrt(solve_lyapunov(a, qs));
    Eigen::Vector2d g(rng.next_gaussian(), rng.next_gaussian());
    x.head(2) = l_spin * g;
    if (!deterministic_drive) {
      if (p.kappa_q > 0.0) {
        x(2) = std::sqrt(p.Q_q / (2.0 * p.kappa_q)) * rng.next_gaussian();
      }
      if (p.kappa_p > 0.0) {
        x(3) = std::sqrt(p.Q_p / (2.0 * p.kappa_p)) * rng.next_gaussian();
      }
    }
  }

  std::vector<double> q_bar, q_bar_dot;
  std::unique_ptr<DeterministicSpinResponse> spin_det;
  if (deterministic_drive) {
    auto grids = synthesize_unknown_waveform(spec, n_steps, p.delta);
    q_bar = std::move(grids.first);
    q_bar_dot = std::move(grids.second);
    spin_det =
        std::make_unique<DeterministicSpinResponse>(p, spec.segments, spec.kind);
  }

  const double sigma_obs = std::sqrt(p.R / p.delta);
  Eigen::Vector2d j_det = Eigen::Vector2d::Zero();
  for (int k = 0; k < n_steps; ++k) {
    const double t = k * p.delta;
    traj.times[k] = t;
    if (k > 0) {
      const int slot = periodic ? (k - 1) % period : 0;
      if (!ready[slot] || !periodic) {
        Propagator prop = propagator(model, t - p.delta, t);
        phis[slot] = prop.phi;
        chols[slot] = psd_sqrt(prop.q_delta);
        ready[slot] = true;
      }
      Vec g(4);
      for (int i = 0; i < 4; ++i) g(i) = rng.next_gaussian();
      x = phis[slot] * x + chols[slot] * g;
      if (deterministic_drive) j_det = spin_det->step(t - p.delta);
    }
    Vec full = x;
    if (deterministic_drive) {
      full(0) += j_det(0);
      full(1) += j_det(1);
      full(2) += q_bar[k];
      // the drive's p quadrature is identically zero
    }
    traj.states[k] = full;
    traj.waveform[k] = p.g_P * (full(2) * std::cos(p.omega_P * t) +
                                full(3) * std::sin(p.omega_P * t));
    traj.observations[k] = p.g_D * full(1) + sigma_obs * rng.next_gaussian();
  }
  return traj;
}

std::pair<std::vector<double>, std::vector<double>> synthesize_unknown_waveform(
    const WaveformSpec& spec, int n_steps, double delta) {
  if (spec.kind == WaveformSpec::Kind::OU) {
    throw InvalidInput(
        "synthesize_unknown_waveform: OU drives have no deterministic part");
  }
  if (n_steps < 1) {
    throw InvalidInput("synthesize_unknown_waveform: n_steps must be >= 1");
  }
  check_segments(spec.segments, (n_steps - 1) * delta);
  std::vector<double> q(n_steps), qdot(n_steps);
  std::size_t seg = 0;
  double seg_start = 0.0;
  for (int k = 0; k < n_steps; ++k) {
    const double t = k * delta;
    while (seg + 1 < spec.segments.size() &&
           t >= seg_start + spec.segments[seg].duration - 1e-15) {
      seg_start += spec.segments[seg].duration;
      ++seg;
    }
    const double u = t - seg_start;
    q[k] = segment_value(spec.segments[seg], spec.kind, u);
    qdot[k] = segment_slope(spec.segments[seg], spec.kind, u);
  }
  return {std::move(q), std::move(qdot)};
}

std::vector<std::uint64_t> replicate(int runs, std::uint64_t base_seed) {
  if (runs < 1) throw InvalidInput("replicate: runs must be >= 1");
  std::vector<std::uint64_t> seeds(runs);
  for (int i = 0; i < runs; ++i) {
    seeds[i] = CounterRng::derive_seed(base_seed, static_cast<std::uint64_t>(i));
  }
  return seeds;
}

}  // namespace atomsense
