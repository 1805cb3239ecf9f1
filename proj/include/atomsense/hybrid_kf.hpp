#pragma once

#include <utility>
#include <vector>

#include "atomsense/linear_model.hpp"

namespace atomsense {

enum class Stage { Predicted, Updated };

/// Filter mean and error covariance at one stage of the recursion.
struct GaussianBelief {
  Vec mean;
  Mat cov;
  double t = 0.0;
  Stage stage = Stage::Updated;
};

/// Per-step innovation diagnostics from the update step.
struct StepDiagnostics {
  Vec innovation;      // z_k - H x_pred
  Mat innovation_cov;  // S_k = R_delta + H P H^T
  Mat gain;            // K_k
  double nis = 0.0;    // y^T S^-1 y
  Vec predicted_obs;   // H x_pred
};

struct FilterStep {
  GaussianBelief belief;  // updated (k|k)
  StepDiagnostics diag;
};

/// Prior from the first observation: mean H^+ z0,
/// covariance G Q G^T + H^+ R_delta H^+T.
GaussianBelief initialize(const LinearModel& model, const Vec& z0,
                          double t0 = 0.0);

/// Zero-mean wide prior for runs that start before any observation.
GaussianBelief diffuse_prior(const LinearModel& model, double kappa_diffuse = 1e6,
                             double t0 = 0.0);

GaussianBelief predict(const GaussianBelief& belief, const Propagator& prop);

std::pair<GaussianBelief, StepDiagnostics> update(const GaussianBelief& belief,
                                                  const LinearModel& model,
                                                  const Vec& z);

/// Full recursion over a uniformly spaced observation sequence. The first
/// observation initializes the filter; entry k of the result holds the
/// updated belief after z_k. Entry 0 carries zeroed innovation diagnostics.
std::vector<FilterStep> run_filter(
    const LinearModel& model,
    const std::vector<std::pair<double, Vec>>& observations);

/// Scalar-observation convenience overload on the grid t_k = t0 + k delta.
std::vector<FilterStep> run_filter(const LinearModel& model,
                                   const std::vector<double>& z, double t0 = 0.0);

}  // namespace atomsense
