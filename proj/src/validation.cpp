#include "atomsense/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace atomsense {

ErrorReport true_error_stats(const std::vector<std::vector<double>>& estimates,
                             const std::vector<std::vector<double>>& truth) {
  if (estimates.size() != truth.size()) {
    throw InvalidInput("true_error_stats: run counts differ");
  }
  const int n_runs = static_cast<int>(estimates.size());
  if (n_runs < 2) {
    throw InsufficientReplicates(
        "true_error_stats: bias/variance decomposition needs >= 2 runs");
  }
  const std::size_t n = estimates[0].size();
  for (int r = 0; r < n_runs; ++r) {
    if (estimates[r].size() != n || truth[r].size() != n) {
      throw InvalidInput("true_error_stats: run lengths differ");
    }
  }
  if (n == 0) throw InvalidInput("true_error_stats: empty runs");

  double bias_sq = 0.0, variance = 0.0, mse = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double mean_err = 0.0, mean_sq = 0.0;
    for (int r = 0; r < n_runs; ++r) {
      const double e = estimates[r][t] - truth[r][t];
      mean_err += e;
      mean_sq += e * e;
    }
    mean_err /= n_runs;
    mean_sq /= n_runs;
    bias_sq += mean_err * mean_err;
    variance += mean_sq - mean_err * mean_err;
    mse += mean_sq;
  }
  ErrorReport rep;
  rep.bias_sq = bias_sq / n;
  rep.variance = variance / n;
  rep.mse = mse / n;
  rep.n_samples = static_cast<long>(n);
  rep.n_runs = n_runs;
  return rep;
}

double mean_squared_error(const std::vector<double>& estimates,
                          const std::vector<double>& truth) {
  if (estimates.size() != truth.size() || estimates.empty()) {
    throw InvalidInput("mean_squared_error: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double e = estimates[i] - truth[i];
    acc += e * e;
  }
  return acc / estimates.size();
}

double two_sided_z(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw InvalidInput("two_sided_z: level must lie in (0, 1)");
  }
  // bisection on erf(z / sqrt(2)) = level
  double lo = 0.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::erf(mid / std::sqrt(2.0)) < level) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double coverage_test(const std::vector<double>& errors,
                     const std::vector<double>& predicted_vars, double level) {
  if (errors.size() != predicted_vars.size() || errors.empty()) {
    throw InvalidInput("coverage_test: length mismatch");
  }
  const double z = level == 0.95 ? 1.959964 : two_sided_z(level);
  long inside = 0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(predicted_vars[i] > 0.0)) {
      throw InvalidInput("coverage_test: predicted variances must be > 0");
    }
    if (std::abs(errors[i]) / std::sqrt(predicted_vars[i]) <= z) ++inside;
  }
  return static_cast<double>(inside) / errors.size();
}

WhitenessResult whiteness_test(const std::vector<double>& x, int max_lag) {
  const long n = static_cast<long>(x.size());
  if (max_lag < 1) throw InvalidInput("whiteness_test: max_lag must be >= 1");
  if (n <= 10L * max_lag) {
    throw InvalidInput("whiteness_test: sequence too short for requested lags");
  }
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);

  WhitenessResult res;
  res.threshold = 3.0 / std::sqrt(static_cast<double>(n));
  res.autocorr.assign(max_lag, std::numeric_limits<double>::quiet_NaN());
  if (var <= 0.0 || !(var / n > 1e-300)) {
    res.degenerate = true;
    res.pass = false;
    return res;
  }
  res.pass = true;
  for (int l = 1; l <= max_lag; ++l) {
    double acc = 0.0;
    for (long t = 0; t + l < n; ++t) {
      acc += (x[t] - mean) * (x[t + l] - mean);
    }
    const double rho = acc / var;
    res.autocorr[l - 1] = rho;
    if (std::abs(rho) > res.threshold) res.pass = false;
  }
  return res;
}

HistogramReport histogram_report(const std::vector<double>& samples,
                                 double predicted_sigma, int n_bins) {
  if (n_bins < 3) throw InvalidInput("histogram_report: need at least 3 bins");
  if (!(predicted_sigma > 0.0)) {
    throw InvalidInput("histogram_report: predicted sigma must be > 0");
  }
  if (samples.empty()) throw InvalidInput("histogram_report: empty input");
  const double half_range = 4.0 * predicted_sigma;
  const double width = 2.0 * half_range / n_bins;
  HistogramReport rep;
  rep.n = static_cast<long>(samples.size());
  rep.bin_centers.resize(n_bins);
  rep.density.assign(n_bins, 0.0);
  rep.predicted.resize(n_bins);
  for (int b = 0; b < n_bins; ++b) {
    rep.bin_centers[b] = -half_range + (b + 0.5) * width;
    const double u = rep.bin_centers[b] / predicted_sigma;
    rep.predicted[b] = std::exp(-0.5 * u * u) /
                       (predicted_sigma * std::sqrt(2.0 * M_PI));
  }
  for (double s : samples) {
    int b = static_cast<int>(std::floor((s + half_range) / width));
    b = std::clamp(b, 0, n_bins - 1);
    rep.density[b] += 1.0;
  }
  for (double& d : rep.density) d /= samples.size() * width;
  return rep;
}

}  // namespace atomsense
