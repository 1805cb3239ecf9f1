#pragma once

#include <vector>

#include "atomsense/types.hpp"

namespace atomsense {

/// Bias/variance/MSE decomposition plus consistency statistics for one
/// estimator. mse == bias_sq + variance holds exactly (population variance
/// over runs), and coverage/nis fields are filled by the callers that have
/// the per-step normalization at hand.
struct ErrorReport {
  double bias_sq = 0.0;
  double variance = 0.0;
  double mse = 0.0;
  double coverage_95 = -1.0;  // -1 when not evaluated
  double nis_mean = -1.0;     // -1 when not evaluated
  long n_samples = 0;
  int n_runs = 0;
};

/// Ensemble error statistics over aligned runs (>= 2 for the decomposition).
/// bias(t) and var(t) are taken across runs, then time-averaged.
ErrorReport true_error_stats(const std::vector<std::vector<double>>& estimates,
                             const std::vector<std::vector<double>>& truth);

/// Single-run time-averaged squared error (no bias/variance split).
double mean_squared_error(const std::vector<double>& estimates,
                          const std::vector<double>& truth);

/// Fraction of |error_k| / sqrt(var_k) inside the two-sided confidence band.
double coverage_test(const std::vector<double>& errors,
                     const std::vector<double>& predicted_vars,
                     double level = 0.95);

/// Two-sided normal quantile used by coverage_test (1.959964 at level 0.95).
double two_sided_z(double level);

struct WhitenessResult {
  std::vector<double> autocorr;  // lags 1..max_lag
  double threshold = 0.0;        // 3 / sqrt(N)
  bool pass = false;
  bool degenerate = false;       // input had (numerically) zero variance
};

/// Sample autocorrelation test of normalized innovations.
WhitenessResult whiteness_test(const std::vector<double>& normalized_innovations,
                               int max_lag);

struct HistogramReport {
  std::vector<double> bin_centers;
  std::vector<double> density;    // normalized to unit area
  std::vector<double> predicted;  // N(0, sigma^2) pdf at the centers
  long n = 0;
};

/// Histogram of samples against the zero-mean Gaussian the filter predicts.
HistogramReport histogram_report(const std::vector<double>& samples,
                                 double predicted_sigma, int n_bins);

}  // namespace atomsense
