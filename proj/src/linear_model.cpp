#include "atomsense/linear_model.hpp"

#include "atomsense/linalg.hpp"

namespace atomsense {

namespace {

void check_common(const Mat& G, const Mat& Q, const Mat& H, const Mat& R_delta,
                  double delta, int dim_x) {
  if (dim_x <= 0) throw InvalidInput("model: dim_x must be positive");
  if (delta <= 0.0) throw InvalidInput("model: delta must be > 0");
  if (G.rows() != dim_x) throw InvalidInput("model: G row count != dim_x");
  if (Q.rows() != Q.cols() || Q.rows() != G.cols()) {
    throw InvalidInput("model: Q must be square with dim matching G columns");
  }
  if (!Q.allFinite() || !G.allFinite() || !H.allFinite() || !R_delta.allFinite()) {
    throw InvalidInput("model: non-finite matrix entries");
  }
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff())) {
    throw InvalidInput("model: Q must be symmetric");
  }
  if (!is_numerically_psd(Q)) throw InvalidInput("model: Q must be PSD");
  if (H.cols() != dim_x) throw InvalidInput("model: H column count != dim_x");
  if (R_delta.rows() != H.rows() || R_delta.cols() != H.rows()) {
    throw InvalidInput("model: R_delta dimensions inconsistent with H");
  }
  // Singular observation noise is rejected outright: the update-step gain
  // needs an invertible innovation covariance.
  if (!is_positive_definite(R_delta)) {
    throw InvalidInput("model: R_delta must be positive definite");
  }
}

// Fourth-order Magnus generator from two Gauss-Legendre nodes on [t0, t0+h].
Mat magnus_gauss2(const GeneratorFn& f, double t0, double h) {
  static const double kOffset = std::sqrt(3.0) / 6.0;
  const Mat f1 = f(t0 + (0.5 - kOffset) * h);
  const Mat f2 = f(t0 + (0.5 + kOffset) * h);
  const Mat comm = f2 * f1 - f1 * f2;
  return 0.5 * h * (f1 + f2) + (std::sqrt(3.0) / 12.0) * h * h * comm;
}

DiscretePair step_midpoint(const LinearModel& m, double t0, double h) {
  return van_loan_discretize(m.F_of_t(t0 + 0.5 * h), m.G, m.Q, h);
}

// One Gauss4 substep: Magnus transition plus a two-node quadrature of the
// noise integral, with node-to-end factors from partial Magnus generators.
DiscretePair step_gauss4(const LinearModel& m, double t0, double h) {
  static const double kOffset = std::sqrt(3.0) / 6.0;
  DiscretePair out;
  out.phi = magnus_gauss2(m.F_of_t, t0, h).exp();
  const Mat gqgt = m.G * m.Q * m.G.transpose();
  Mat q = Mat::Zero(m.dim_x, m.dim_x);
  for (double c : {0.5 - kOffset, 0.5 + kOffset}) {
    const double s = t0 + c * h;
    const Mat phi_end = magnus_gauss2(m.F_of_t, s, h * (1.0 - c)).exp();
    q += (0.5 * h) * phi_end * gqgt * phi_end.transpose();
  }
  out.q_delta = symmetrized(q);
  return out;
}

}  // namespace

LinearModel make_time_invariant_model(const Mat& F, const Mat& G, const Mat& Q,
                                      const Mat& H, const Mat& R_delta,
                                      double delta) {
  const int dim_x = static_cast<int>(F.rows());
  if (F.cols() != F.rows()) throw InvalidInput("model: F must be square");
  if (!F.allFinite()) throw InvalidInput("model: non-finite F");
  check_common(G, Q, H, R_delta, delta, dim_x);
  LinearModel m;
  m.dim_x = dim_x;
  m.dim_z = static_cast<int>(H.rows());
  m.time_invariant = true;
  m.F = F;
  m.F_of_t = [F](double) { return F; };
  m.G = G;
  m.Q = Q;
  m.H = H;
  m.R_delta = R_delta;
  m.delta = delta;
  return m;
}

LinearModel make_time_varying_model(int dim_x, GeneratorFn F_of_t, const Mat& G,
                                    const Mat& Q, const Mat& H,
                                    const Mat& R_delta, double delta, int n_sub,
                                    PropagatorOrder order) {
  if (!F_of_t) throw InvalidInput("model: missing generator callback");
  if (n_sub < 1) throw InvalidInput("model: n_sub must be >= 1");
  check_common(G, Q, H, R_delta, delta, dim_x);
  const Mat f0 = F_of_t(0.0);
  if (f0.rows() != dim_x || f0.cols() != dim_x) {
    throw InvalidInput("model: generator callback dimension mismatch");
  }
  LinearModel m;
  m.dim_x = dim_x;
  m.dim_z = static_cast<int>(H.rows());
  m.time_invariant = false;
  m.F_of_t = std::move(F_of_t);
  m.G = G;
  m.Q = Q;
  m.H = H;
  m.R_delta = R_delta;
  m.delta = delta;
  m.n_sub = n_sub;
  m.order = order;
  return m;
}

Mat transition_matrix(const Mat& F, double tau) {
  if (tau < 0.0) throw InvalidInput("transition_matrix: tau must be >= 0");
  return matrix_exponential(F, tau);
}

Mat discretize_noise(const Mat& F, const Mat& G, const Mat& Q, double delta) {
  return van_loan_discretize(F, G, Q, delta).q_delta;
}

Propagator propagator(const LinearModel& model, double t_prev, double t_next) {
  if (!(t_next > t_prev)) {
    throw InvalidInput("propagator: t_next must exceed t_prev");
  }
  Propagator p;
  p.t_begin = t_prev;
  p.t_end = t_next;
  const double tau = t_next - t_prev;
  if (model.time_invariant) {
    DiscretePair d = van_loan_discretize(model.F, model.G, model.Q, tau);
    p.phi = std::move(d.phi);
    p.q_delta = std::move(d.q_delta);
    return p;
  }
  const double h = tau / model.n_sub;
  Mat phi = Mat::Identity(model.dim_x, model.dim_x);
  Mat q = Mat::Zero(model.dim_x, model.dim_x);
  for (int j = 0; j < model.n_sub; ++j) {
    const double t0 = t_prev + j * h;
    const DiscretePair d = model.order == PropagatorOrder::Midpoint
                               ? step_midpoint(model, t0, h)
                               : step_gauss4(model, t0, h);
    phi = d.phi * phi;
    q = d.phi * q * d.phi.transpose() + d.q_delta;
  }
  p.phi = std::move(phi);
  p.q_delta = symmetrized(q);
  return p;
}

}  // namespace atomsense
