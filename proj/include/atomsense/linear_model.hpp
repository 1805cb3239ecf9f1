#pragma once

#include <functional>

#include "atomsense/types.hpp"

namespace atomsense {

using GeneratorFn = std::function<Mat(double)>;

/// Local integration rule used by the piecewise propagator for time-varying
/// generators. Midpoint freezes F at each substep midpoint (2nd order);
/// Gauss4 uses a two-node Gauss-Legendre Magnus generator plus a two-node
/// quadrature of the noise integral (4th order).
enum class PropagatorOrder { Midpoint, Gauss4 };

/// Continuous linear-Gaussian dynamics with a discrete-time observation:
/// dx = F(t) x dt + G dw,  E[dw dw^T] = Q dt,  z_k = H x(t_k) + v_k,
/// v_k ~ N(0, R_delta) with samples every `delta` seconds.
struct LinearModel {
  int dim_x = 0;
  int dim_z = 0;
  bool time_invariant = true;
  Mat F;              // constant generator (time-invariant models)
  GeneratorFn F_of_t; // generator callback (time-varying models)
  Mat G;              // dim_x x dim_w noise input map
  Mat Q;              // dim_w x dim_w noise intensity, PSD
  Mat H;              // dim_z x dim_x observation matrix
  Mat R_delta;        // dim_z x dim_z observation noise covariance, PD
  double delta = 0.0; // sampling period [s]
  int n_sub = 8;      // substeps per interval for time-varying propagation
  PropagatorOrder order = PropagatorOrder::Gauss4;
  int period_steps = 0; // >0 when F(t + period_steps * delta) == F(t)

  Mat generator_at(double t) const { return time_invariant ? F : F_of_t(t); }
};

/// Discrete propagator over one interval: x_k = phi x_{k-1} + w,
/// w ~ N(0, q_delta).
struct Propagator {
  Mat phi;
  Mat q_delta;
  double t_begin = 0.0;
  double t_end = 0.0;
};

LinearModel make_time_invariant_model(const Mat& F, const Mat& G, const Mat& Q,
                                      const Mat& H, const Mat& R_delta,
                                      double delta);

LinearModel make_time_varying_model(int dim_x, GeneratorFn F_of_t, const Mat& G,
                                    const Mat& Q, const Mat& H,
                                    const Mat& R_delta, double delta,
                                    int n_sub = 8,
                                    PropagatorOrder order = PropagatorOrder::Gauss4);

/// exp(F * tau). Throws InvalidInput for non-finite F or tau < 0.
Mat transition_matrix(const Mat& F, double tau);

/// Effective process noise over one interval for constant F:
/// Q_delta = int_0^delta exp(F s) G Q G^T exp(F^T s) ds, symmetrized.
Mat discretize_noise(const Mat& F, const Mat& G, const Mat& Q, double delta);

/// Exact propagator for time-invariant models; piecewise composition (n_sub
/// substeps, local rule per model.order) for time-varying ones.
Propagator propagator(const LinearModel& model, double t_prev, double t_next);

}  // namespace atomsense
