#include "atomsense/sensor_models.hpp"

#include <cmath>

namespace atomsense {

namespace {

constexpr double kSpeedOfLightCgs = 2.99792458e10;  // cm/s

Mat spin_block(const SensorParams& p) {
  Mat a(2, 2);
  a << -1.0 / p.T2, p.omega_L, -p.omega_L, -1.0 / p.T2;
  return a;
}

// Rounds the carrier period to a whole number of samples when it is one,
// letting downstream code reuse per-slot propagators.
int detect_period_steps(double omega_P, double delta) {
  if (omega_P <= 0.0) return 0;
  const double steps = 2.0 * M_PI / (omega_P * delta);
  const double rounded = std::round(steps);
  if (rounded >= 1.0 && rounded <= 4096.0 &&
      std::abs(steps - rounded) < 1e-9 * steps) {
    return static_cast<int>(rounded);
  }
  return 0;
}

int state_dim(Variant variant, int poly_order) {
  return variant == Variant::PolynomialL2 ? 2 + 2 * (poly_order + 1) : 4;
}

Vec noise_diagonal(const SensorParams& p, Variant variant, int poly_order) {
  const int n = state_dim(variant, poly_order);
  Vec q = Vec::Zero(n);
  q(0) = p.Q_y;
  q(1) = p.Q_z;
  switch (variant) {
    case Variant::KnownOU:
    case Variant::RotatingFrame:
    case Variant::WienerProcess:
      q(2) = p.Q_q;
      q(3) = p.Q_p;
      break;
    case Variant::PolynomialL2: {
      // All noise enters at the top derivative, scaled by the sampling
      // period: rate Q / delta^(2 l).
      const double rate = p.Q_q / std::pow(p.delta, 2.0 * poly_order);
      q(n - 2) = rate;
      q(n - 1) = rate;
      break;
    }
  }
  return q;
}

void require_isotropic_quadrature(const SensorParams& p, const char* variant) {
  if (p.Q_q != p.Q_p) {
    throw InvalidInput(std::string(variant) +
                       ": requires equal quadrature noise rates Q_q == Q_p");
  }
}

}  // namespace

void validate(const SensorParams& p) {
  if (!(p.T2 > 0.0)) throw InvalidInput("SensorParams: T2 must be > 0");
  if (!(p.delta > 0.0)) throw InvalidInput("SensorParams: delta must be > 0");
  if (!(p.R > 0.0)) throw InvalidInput("SensorParams: R must be > 0");
  if (p.Q_y < 0.0 || p.Q_z < 0.0 || p.Q_q < 0.0 || p.Q_p < 0.0) {
    throw InvalidInput("SensorParams: noise rates must be >= 0");
  }
  if (p.kappa_q < 0.0 || p.kappa_p < 0.0) {
    throw InvalidInput("SensorParams: kappa must be >= 0");
  }
  if (!(p.g_D != 0.0)) throw InvalidInput("SensorParams: g_D must be nonzero");
}

LinearModel build_model(const SensorParams& p, Variant variant,
                        int poly_order) {
  validate(p);
  if (variant == Variant::PolynomialL2 && poly_order < 1) {
    throw InvalidInput("build_model: polynomial order must be >= 1");
  }
  const int n = state_dim(variant, poly_order);
  Mat h = Mat::Zero(1, n);
  h(0, 1) = p.g_D;
  Mat r(1, 1);
  r(0, 0) = p.R / p.delta;
  const Mat g = Mat::Identity(n, n);
  const Mat q = noise_diagonal(p, variant, poly_order).asDiagonal();

  if (variant == Variant::RotatingFrame) {
    require_isotropic_quadrature(p, "RotatingFrame");
    if (p.kappa_q != p.kappa_p) {
      throw InvalidInput("RotatingFrame: requires kappa_q == kappa_p");
    }
    return make_time_invariant_model(rotating_frame_generator(p, variant), g,
                                     q, h, r, p.delta);
  }

  const double gP = p.g_P;
  const double wP = p.omega_P;
  const Mat a = spin_block(p);
  GeneratorFn f;
  switch (variant) {
    case Variant::KnownOU:
      f = [a, gP, wP, kq = p.kappa_q, kp = p.kappa_p](double t) {
        Mat m = Mat::Zero(4, 4);
        m.topLeftCorner(2, 2) = a;
        m(1, 2) = gP * std::cos(wP * t);
        m(1, 3) = gP * std::sin(wP * t);
        m(2, 2) = -kq;
        m(3, 3) = -kp;
        return m;
      };
      break;
    case Variant::WienerProcess:
      require_isotropic_quadrature(p, "WienerProcess");
      f = [a, gP, wP](double t) {
        Mat m = Mat::Zero(4, 4);
        m.topLeftCorner(2, 2) = a;
        m(1, 2) = gP * std::cos(wP * t);
        m(1, 3) = gP * std::sin(wP * t);
        return m;
      };
      break;
    case Variant::PolynomialL2: {
      require_isotropic_quadrature(p, "PolynomialL2");
      const int dim = n;
      f = [a, gP, wP, dim](double t) {
        Mat m = Mat::Zero(dim, dim);
        m.topLeftCorner(2, 2) = a;
        m(1, 2) = gP * std::cos(wP * t);
        m(1, 3) = gP * std::sin(wP * t);
        // integrator chain: d/dt of each derivative pair is the next one
        for (int i = 2; i + 3 < dim; i += 2) {
          m(i, i + 2) = 1.0;
          m(i + 1, i + 3) = 1.0;
        }
        return m;
      };
      break;
    }
    default:
      throw InvalidInput("build_model: unsupported variant");
  }
  LinearModel m = make_time_varying_model(n, std::move(f), g, q, h, r, p.delta);
  m.period_steps = detect_period_steps(wP, p.delta);
  return m;
}

Mat rotating_frame_generator(const SensorParams& p, Variant variant,
                             int poly_order) {
  validate(p);
  const int n = state_dim(variant, poly_order);
  Mat m = Mat::Zero(n, n);
  m.topLeftCorner(2, 2) = spin_block(p);
  m(1, 2) = p.g_P;  // coupling row becomes constant in the rotating frame
  switch (variant) {
    case Variant::KnownOU:
    case Variant::RotatingFrame:
      require_isotropic_quadrature(p, "rotating_frame_generator");
      if (p.kappa_q != p.kappa_p) {
        throw InvalidInput("rotating_frame_generator: requires kappa_q == kappa_p");
      }
      m(2, 2) = -p.kappa_q;
      m(3, 3) = -p.kappa_q;
      break;
    case Variant::WienerProcess:
      require_isotropic_quadrature(p, "rotating_frame_generator");
      break;
    case Variant::PolynomialL2:
      require_isotropic_quadrature(p, "rotating_frame_generator");
      for (int i = 2; i + 3 < n; i += 2) {
        m(i, i + 2) = 1.0;
        m(i + 1, i + 3) = 1.0;
      }
      break;
  }
  // Frame rotation adds omega_P J to every quadrature-derivative pair.
  for (int i = 2; i + 1 < n; i += 2) {
    m(i, i + 1) += p.omega_P;
    m(i + 1, i) -= p.omega_P;
  }
  return m;
}

Vec to_rotating_frame(const Vec& x, double t, double omega_P,
                      FrameDirection direction) {
  if (x.size() < 4 || x.size() % 2 != 0) {
    throw InvalidInput("to_rotating_frame: state must hold spin + (q,p) pairs");
  }
  const double angle =
      direction == FrameDirection::LabToRotating ? omega_P * t : -omega_P * t;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Vec out = x;
  for (Eigen::Index i = 2; i + 1 < x.size(); i += 2) {
    out(i) = c * x(i) + s * x(i + 1);
    out(i + 1) = -s * x(i) + c * x(i + 1);
  }
  return out;
}

Mat to_rotating_frame(const Mat& cov, double t, double omega_P,
                      FrameDirection direction) {
  if (cov.rows() != cov.cols() || cov.rows() < 4 || cov.rows() % 2 != 0) {
    throw InvalidInput("to_rotating_frame: covariance must hold spin + (q,p) pairs");
  }
  const double angle =
      direction == FrameDirection::LabToRotating ? omega_P * t : -omega_P * t;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat rot = Mat::Identity(cov.rows(), cov.cols());
  for (Eigen::Index i = 2; i + 1 < cov.rows(); i += 2) {
    rot(i, i) = c;
    rot(i, i + 1) = s;
    rot(i + 1, i) = -s;
    rot(i + 1, i + 1) = c;
  }
  return symmetrized(rot * cov * rot.transpose());
}

void validate(const PhysicsConstants& c) {
  if (!(c.probe_power > 0.0) || !(c.responsivity > 0.0) || !(c.r_e > 0.0) ||
      !(c.f_osc > 0.0) || !(c.A_eff > 0.0) || !(c.linewidth_fwhm > 0.0) ||
      !(c.tia_gain > 0.0) || !(c.n_density > 0.0) || !(c.cell_length > 0.0)) {
    throw InvalidInput("PhysicsConstants: all constants must be positive");
  }
  if (c.detuning == 0.0) {
    throw InvalidInput("PhysicsConstants: detuning must be nonzero");
  }
}

double faraday_transduction(const PhysicsConstants& c) {
  validate(c);
  return 2.0 * c.responsivity * c.probe_power *
         (kSpeedOfLightCgs * c.r_e * c.f_osc / c.A_eff) / c.detuning;
}

double hyperfine_coupling(const PhysicsConstants& c) {
  validate(c);
  const double half_width = 0.5 * c.linewidth_fwhm;
  return (kSpeedOfLightCgs * c.r_e * c.f_osc / c.A_eff) * c.detuning /
         (c.detuning * c.detuning + half_width * half_width);
}

double faraday_rotation_angle(const PhysicsConstants& c, double J_z) {
  validate(c);
  return (kSpeedOfLightCgs * c.r_e * c.f_osc / c.A_eff) / c.detuning * J_z;
}

double atom_number(const PhysicsConstants& c) {
  validate(c);
  return c.n_density * c.A_eff * c.cell_length;
}

std::tuple<double, double, double> spin_noise_rates(const PsdFit& fit,
                                                    double g_D) {
  if (!(fit.S_at > 0.0) || !(fit.S_ph > 0.0) || !(fit.T2 > 0.0)) {
    throw InvalidInput("spin_noise_rates: fit parameters must be positive");
  }
  if (g_D == 0.0) throw InvalidInput("spin_noise_rates: g_D must be nonzero");
  const double q = 2.0 * fit.S_at / (fit.T2 * g_D * g_D);
  return {q, q, fit.S_ph};
}

std::pair<double, double> waveform_estimate(const GaussianBelief& belief,
                                            const SensorParams& p, double t) {
  if (belief.mean.size() < 4) {
    throw InvalidInput("waveform_estimate: belief is not a sensor state");
  }
  const double c = std::cos(p.omega_P * t);
  const double s = std::sin(p.omega_P * t);
  const double e_hat = p.g_P * (belief.mean(2) * c + belief.mean(3) * s);
  Eigen::Vector2d dir(c, s);
  const double var =
      p.g_P * p.g_P * dir.dot(belief.cov.block(2, 2, 2, 2) * dir);
  return {e_hat, var};
}

}  // namespace atomsense
