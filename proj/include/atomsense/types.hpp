#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace atomsense {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Thrown when an argument violates a documented precondition.
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown when the observation matrix has zero rank and no prior can be formed.
struct InitializationImpossible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when the innovation covariance is numerically singular.
struct IllConditionedUpdate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a Riccati solver fails to converge (undetectable model).
struct NoSteadyState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when an ODE integration step produced non-finite values.
struct StepTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when an ensemble statistic needs more runs than were supplied.
struct InsufficientReplicates : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename Derived>
inline Mat symmetrized(const Eigen::MatrixBase<Derived>& a) {
  return 0.5 * (a + a.transpose());
}

template <typename Derived>
inline bool all_finite(const Eigen::MatrixBase<Derived>& a) {
  return a.allFinite();
}

/// Numerical PSD check: smallest eigenvalue above -tol * scale.
inline bool is_numerically_psd(const Mat& a, double tol = 1e-10) {
  if (a.rows() != a.cols()) return false;
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(a));
  const double scale = std::max(1e-300, a.cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() >= -tol * scale;
}

inline bool is_positive_definite(const Mat& a) {
  if (a.rows() != a.cols()) return false;
  Eigen::LLT<Mat> llt(symmetrized(a));
  return llt.info() == Eigen::Success;
}

/// Moore-Penrose pseudoinverse via SVD with relative rank cutoff.
inline Mat pseudo_inverse(const Mat& a, double rel_tol = 1e-12) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = rel_tol * sv.size() * (sv.size() ? sv(0) : 0.0);
  Vec inv = Vec::Zero(sv.size());
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace atomsense
