#pragma once

#include "atomsense/types.hpp"

namespace atomsense {

/// Steady-state filter quantities from the discrete algebraic Riccati
/// equation: predicted / updated covariances, gain and innovation covariance.
struct SteadyState {
  Mat sigma_pred;
  Mat sigma_upd;
  Mat gain;
  Mat innov_cov;
  long iterations = 0;
  double residual = 0.0;
};

enum class DareMethod {
  FixedPoint,  // iterate the prediction-update map (also the test oracle)
  Doubling     // structure-preserving doubling accelerator
};

/// Relative residual of the DARE map at sigma_pred:
/// ||Phi (S - S H^T (R + H S H^T)^-1 H S) Phi^T + Q - S|| / ||S||.
double dare_residual(const Mat& phi, const Mat& H, const Mat& q_delta,
                     const Mat& r_delta, const Mat& sigma_pred);

SteadyState solve_dare(const Mat& phi, const Mat& H, const Mat& q_delta,
                       const Mat& r_delta, double tol = 1e-12,
                       DareMethod method = DareMethod::FixedPoint,
                       long max_iterations = 1000000, double damping = 1.0);

/// Relative residual of the CARE at sigma:
/// ||F S + S F^T + GQG^T - S H^T R^-1 H S|| / max(1, ||S||).
double care_residual(const Mat& F, const Mat& H, const Mat& GQGt, const Mat& R,
                     const Mat& sigma);

/// Steady-state covariance of the continuous filter. Integrates the variance
/// equation towards stationarity, then polishes the fixed point with Newton
/// steps (closed-loop Lyapunov solves) down to `tol`.
Mat solve_care(const Mat& F, const Mat& H, const Mat& GQGt, const Mat& R,
               double tol = 1e-10);

/// RK4 integration of dS/dt = F S + S F^T + GQG^T - S H^T R^-1 H S with
/// per-step symmetrization.
Mat integrate_variance_equation(const Mat& F, const Mat& H, const Mat& GQGt,
                                const Mat& R, const Mat& sigma0, double t_end,
                                double dt);

/// Continuous-filter gain K = sigma H^T R^-1.
Mat kalman_bucy_gain(const Mat& sigma, const Mat& H, const Mat& R);

}  // namespace atomsense
