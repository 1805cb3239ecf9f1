#include "atomsense/riccati.hpp"

#include <cmath>

#include "atomsense/linalg.hpp"

namespace atomsense {

namespace {

// One application of the prediction-update covariance map.
Mat dare_map(const Mat& phi, const Mat& H, const Mat& q_delta,
             const Mat& r_delta, const Mat& sigma) {
  const Mat s = symmetrized(r_delta + H * sigma * H.transpose());
  Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success) {
    throw NoSteadyState("solve_dare: innovation covariance not positive definite");
  }
  const Mat gain = llt.solve(H * sigma).transpose();
  const Eigen::Index n = sigma.rows();
  const Mat ikh = Mat::Identity(n, n) - gain * H;
  const Mat upd = symmetrized(ikh * sigma * ikh.transpose() +
                              gain * r_delta * gain.transpose());
  return symmetrized(phi * upd * phi.transpose() + q_delta);
}

void check_dare_inputs(const Mat& phi, const Mat& H, const Mat& q_delta,
                       const Mat& r_delta) {
  const Eigen::Index n = phi.rows();
  if (phi.cols() != n || q_delta.rows() != n || q_delta.cols() != n ||
      H.cols() != n || r_delta.rows() != H.rows() ||
      r_delta.cols() != H.rows()) {
    throw InvalidInput("solve_dare: inconsistent dimensions");
  }
  if (!is_positive_definite(r_delta)) {
    throw InvalidInput("solve_dare: r_delta must be positive definite");
  }
}

SteadyState finish_steady_state(const Mat& phi, const Mat& H,
                                const Mat& q_delta, const Mat& r_delta,
                                Mat sigma_pred, long iterations, double tol) {
  SteadyState out;
  out.sigma_pred = symmetrized(sigma_pred);
  out.iterations = iterations;
  out.residual = dare_residual(phi, H, q_delta, r_delta, out.sigma_pred);
  if (!(out.residual <= tol) || !out.sigma_pred.allFinite()) {
    throw NoSteadyState("solve_dare: no verified fixed point (residual " +
                        std::to_string(out.residual) + ")");
  }
  out.innov_cov =
      symmetrized(r_delta + H * out.sigma_pred * H.transpose());
  Eigen::LLT<Mat> llt(out.innov_cov);
  out.gain = llt.solve(H * out.sigma_pred).transpose();
  const Eigen::Index n = sigma_pred.rows();
  const Mat ikh = Mat::Identity(n, n) - out.gain * H;
  out.sigma_upd = symmetrized(ikh * out.sigma_pred * ikh.transpose() +
                              out.gain * r_delta * out.gain.transpose());
  return out;
}

Mat variance_equation_rhs(const Mat& F, const Mat& H, const Mat& GQGt,
                          const Eigen::LLT<Mat>& r_llt, const Mat& sigma) {
  const Mat hs = H * sigma;
  return F * sigma + sigma * F.transpose() + GQGt -
         hs.transpose() * r_llt.solve(hs);
}

}  // namespace

double dare_residual(const Mat& phi, const Mat& H, const Mat& q_delta,
                     const Mat& r_delta, const Mat& sigma_pred) {
  const Mat next = dare_map(phi, H, q_delta, r_delta, sigma_pred);
  const double scale = std::max(sigma_pred.norm(), 1e-300);
  return (next - sigma_pred).norm() / scale;
}

SteadyState solve_dare(const Mat& phi, const Mat& H, const Mat& q_delta,
                       const Mat& r_delta, double tol, DareMethod method,
                       long max_iterations, double damping) {
  check_dare_inputs(phi, H, q_delta, r_delta);
  if (!(damping > 0.0 && damping <= 1.0)) {
    throw InvalidInput("solve_dare: damping must lie in (0, 1]");
  }

  if (method == DareMethod::FixedPoint) {
    Mat sigma = symmetrized(q_delta);
    for (long it = 1; it <= max_iterations; ++it) {
      const Mat next = dare_map(phi, H, q_delta, r_delta, sigma);
      const double change =
          (next - sigma).norm() / std::max(sigma.norm(), 1e-300);
      sigma = damping == 1.0
                  ? next
                  : symmetrized((1.0 - damping) * sigma + damping * next);
      if (!sigma.allFinite()) {
        throw NoSteadyState("solve_dare: iteration diverged");
      }
      if (change <= tol) {
        return finish_steady_state(phi, H, q_delta, r_delta, sigma, it,
                                   10.0 * tol);
      }
    }
    throw NoSteadyState("solve_dare: fixed-point iteration did not converge");
  }

  // Structure-preserving doubling. The filter DARE in the unknown sigma_pred
  // maps onto the control form with A = Phi^T, B = H^T.
  const Eigen::Index n = phi.rows();
  Eigen::LLT<Mat> r_llt(symmetrized(r_delta));
  Mat a = phi.transpose();
  Mat g = H.transpose() * r_llt.solve(H);
  Mat h = symmetrized(q_delta);
  const Mat eye = Mat::Identity(n, n);
  long it = 0;
  for (; it < 200; ++it) {
    const Mat w = eye + g * h;
    Eigen::PartialPivLU<Mat> lu(w);
    const Mat wa = lu.solve(a);          // (I + GH)^-1 A
    const Mat wg = lu.solve(g);          // (I + GH)^-1 G
    const Mat h_next = symmetrized(h + a.transpose() * h * wa);
    const Mat g_next = symmetrized(g + a * wg * a.transpose());
    const Mat a_next = a * wa;
    const double change = (h_next - h).norm() / std::max(h.norm(), 1e-300);
    a = a_next;
    g = g_next;
    h = h_next;
    if (!h.allFinite()) {
      throw NoSteadyState("solve_dare: doubling iteration diverged");
    }
    if (change <= tol) break;
  }
  return finish_steady_state(phi, H, q_delta, r_delta, h, it + 1, 10.0 * tol);
}

double care_residual(const Mat& F, const Mat& H, const Mat& GQGt, const Mat& R,
                     const Mat& sigma) {
  Eigen::LLT<Mat> r_llt(symmetrized(R));
  const Mat res = variance_equation_rhs(F, H, GQGt, r_llt, sigma);
  return res.norm() / std::max(1.0, sigma.norm());
}

Mat integrate_variance_equation(const Mat& F, const Mat& H, const Mat& GQGt,
                                const Mat& R, const Mat& sigma0, double t_end,
                                double dt) {
  if (dt <= 0.0) throw InvalidInput("integrate_variance_equation: dt must be > 0");
  if (!is_positive_definite(R)) {
    throw InvalidInput("integrate_variance_equation: R must be positive definite");
  }
  Eigen::LLT<Mat> r_llt(symmetrized(R));
  Mat sigma = symmetrized(sigma0);
  const long n_steps = static_cast<long>(std::ceil(t_end / dt));
  for (long k = 0; k < n_steps; ++k) {
    const double h = std::min(dt, t_end - k * dt);
    const Mat k1 = variance_equation_rhs(F, H, GQGt, r_llt, sigma);
    const Mat k2 = variance_equation_rhs(F, H, GQGt, r_llt, sigma + 0.5 * h * k1);
    const Mat k3 = variance_equation_rhs(F, H, GQGt, r_llt, sigma + 0.5 * h * k2);
    const Mat k4 = variance_equation_rhs(F, H, GQGt, r_llt, sigma + h * k3);
    sigma = symmetrized(sigma + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    if (!sigma.allFinite()) {
      throw StepTooLarge("integrate_variance_equation: step produced non-finite values");
    }
  }
  return sigma;
}

Mat solve_care(const Mat& F, const Mat& H, const Mat& GQGt, const Mat& R,
               double tol) {
  const Eigen::Index n = F.rows();
  if (F.cols() != n || GQGt.rows() != n || GQGt.cols() != n || H.cols() != n ||
      R.rows() != H.rows() || R.cols() != H.rows()) {
    throw InvalidInput("solve_care: inconsistent dimensions");
  }
  if (!is_positive_definite(R)) {
    throw InvalidInput("solve_care: R must be positive definite");
  }
  Eigen::LLT<Mat> r_llt(symmetrized(R));

  // Coarse stationary point by integrating the variance equation: time scales
  // from the eigenvalues of F set the horizon and step.
  const Eigen::EigenSolver<Mat> es(F);
  double fastest = 1.0;
  double slowest_decay = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    fastest = std::max(fastest, std::abs(es.eigenvalues()(i)));
    slowest_decay = std::max(slowest_decay, -es.eigenvalues()(i).real());
  }
  const double horizon =
      slowest_decay > 0.0 ? 20.0 / slowest_decay : 100.0 / fastest;
  const double dt = 0.05 / fastest;
  Mat sigma = integrate_variance_equation(F, H, GQGt, R, symmetrized(GQGt),
                                          horizon, dt);

  // Newton polish: solve the closed-loop Lyapunov equation at each iterate.
  double res = care_residual(F, H, GQGt, R, sigma);
  for (int it = 0; it < 60 && res > tol; ++it) {
    const Mat gain = sigma * H.transpose() * r_llt.solve(Mat::Identity(R.rows(), R.rows()));
    const Mat a_cl = F - gain * H;
    const Mat w = symmetrized(GQGt + gain * R * gain.transpose());
    Mat next = solve_lyapunov(a_cl, w);
    if (!next.allFinite()) break;
    sigma = next;
    res = care_residual(F, H, GQGt, R, sigma);
  }
  if (!(res <= tol)) {
    throw NoSteadyState("solve_care: residual " + std::to_string(res) +
                        " above tolerance");
  }
  return sigma;
}

Mat kalman_bucy_gain(const Mat& sigma, const Mat& H, const Mat& R) {
  if (!is_positive_definite(R)) {
    throw InvalidInput("kalman_bucy_gain: R must be positive definite");
  }
  Eigen::LLT<Mat> r_llt(symmetrized(R));
  return r_llt.solve(H * sigma).transpose();
}

}  // namespace atomsense
