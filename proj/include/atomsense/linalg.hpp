#pragma once

#include <unsupported/Eigen/MatrixFunctions>

#include "atomsense/types.hpp"

namespace atomsense {

/// Matrix exponential exp(F * tau) via scaling-and-squaring with Pade
/// approximants (Eigen's MatrixFunctions backend).
template <typename Derived>
Mat matrix_exponential(const Eigen::MatrixBase<Derived>& f, double tau) {
  if (!f.allFinite() || !std::isfinite(tau)) {
    throw InvalidInput("matrix_exponential: non-finite input");
  }
  if (f.rows() != f.cols()) {
    throw InvalidInput("matrix_exponential: matrix must be square");
  }
  return (f * tau).exp();
}

struct DiscretePair {
  Mat phi;      // state transition over the interval
  Mat q_delta;  // accumulated process noise over the interval
};

/// Van Loan discretization: one block exponential of [[-F, GQG^T],[0, F^T]]*h
/// yields both exp(F h) and the noise integral int_0^h e^{F s} GQG^T e^{F^T s} ds.
inline DiscretePair van_loan_discretize(const Mat& f, const Mat& g,
                                        const Mat& q, double h) {
  if (h <= 0.0) throw InvalidInput("van_loan_discretize: interval must be > 0");
  if (!f.allFinite() || !g.allFinite() || !q.allFinite()) {
    throw InvalidInput("van_loan_discretize: non-finite input");
  }
  const Eigen::Index n = f.rows();
  if (f.cols() != n || g.rows() != n || q.rows() != q.cols() ||
      q.rows() != g.cols()) {
    throw InvalidInput("van_loan_discretize: inconsistent dimensions");
  }
  const Mat gqgt = g * q * g.transpose();
  Mat block = Mat::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = -f;
  block.topRightCorner(n, n) = gqgt;
  block.bottomRightCorner(n, n) = f.transpose();
  const Mat e = (block * h).exp();
  DiscretePair out;
  out.phi = e.bottomRightCorner(n, n).transpose();
  out.q_delta = symmetrized(out.phi * e.topRightCorner(n, n));
  return out;
}

/// Solve the continuous Lyapunov equation A X + X A^T + W = 0 for symmetric X
/// by Kronecker vectorization (intended for small dense systems).
inline Mat solve_lyapunov(const Mat& a, const Mat& w) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || w.rows() != n || w.cols() != n) {
    throw InvalidInput("solve_lyapunov: inconsistent dimensions");
  }
  const Mat eye = Mat::Identity(n, n);
  Mat big = Mat::Zero(n * n, n * n);
  // vec(A X + X A^T) = (I (x) A + A (x) I) vec(X), column-major vec.
  for (Eigen::Index j = 0; j < n; ++j) {
    big.block(j * n, j * n, n, n) += a;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      big.block(j * n, k * n, n, n) += a(j, k) * eye;
    }
  }
  Eigen::Map<const Vec> wv(w.data(), n * n);
  Vec xv = big.fullPivLu().solve(-wv);
  Mat x = Eigen::Map<const Mat>(xv.data(), n, n);
  return symmetrized(x);
}

/// Symmetric square root factor L with L L^T = a, tolerant of semidefinite
/// input: Cholesky when possible, eigenvalue square root otherwise.
inline Mat psd_sqrt(const Mat& a, double clip_tol = 1e-12) {
  Eigen::LLT<Mat> llt(symmetrized(a));
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(a));
  const double scale = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
  Vec d = es.eigenvalues();
  for (int i = 0; i < d.size(); ++i) {
    d(i) = d(i) > clip_tol * scale ? std::sqrt(d(i)) : 0.0;
  }
  return es.eigenvectors() * d.asDiagonal();
}

}  // namespace atomsense
