#include "atomsense/hybrid_kf.hpp"

#include <cmath>

#include "atomsense/linalg.hpp"

namespace atomsense {

GaussianBelief initialize(const LinearModel& model, const Vec& z0, double t0) {
  if (z0.size() != model.dim_z) {
    throw InvalidInput("initialize: observation dimension mismatch");
  }
  if (model.H.cwiseAbs().maxCoeff() == 0.0) {
    throw InitializationImpossible("initialize: observation matrix has rank 0");
  }
  const Mat h_pinv = pseudo_inverse(model.H);
  GaussianBelief b;
  b.mean = h_pinv * z0;
  b.cov = symmetrized(model.G * model.Q * model.G.transpose() +
                      h_pinv * model.R_delta * h_pinv.transpose());
  b.t = t0;
  b.stage = Stage::Updated;
  return b;
}

GaussianBelief diffuse_prior(const LinearModel& model, double kappa_diffuse,
                             double t0) {
  if (kappa_diffuse <= 0.0) {
    throw InvalidInput("diffuse_prior: kappa_diffuse must be > 0");
  }
  GaussianBelief b;
  b.mean = Vec::Zero(model.dim_x);
  b.cov = kappa_diffuse * Mat::Identity(model.dim_x, model.dim_x);
  b.t = t0;
  b.stage = Stage::Updated;
  return b;
}

GaussianBelief predict(const GaussianBelief& belief, const Propagator& prop) {
  if (belief.stage != Stage::Updated) {
    throw InvalidInput("predict: belief must be in updated stage");
  }
  if (prop.phi.cols() != belief.mean.size()) {
    throw InvalidInput("predict: propagator dimension mismatch");
  }
  if (std::abs(prop.t_begin - belief.t) >
      1e-9 * std::max(1.0, std::abs(belief.t))) {
    throw InvalidInput("predict: propagator interval does not start at belief time");
  }
  GaussianBelief out;
  out.mean = prop.phi * belief.mean;
  out.cov = symmetrized(prop.phi * belief.cov * prop.phi.transpose() + prop.q_delta);
  out.t = prop.t_end;
  out.stage = Stage::Predicted;
  return out;
}

std::pair<GaussianBelief, StepDiagnostics> update(const GaussianBelief& belief,
                                                  const LinearModel& model,
                                                  const Vec& z) {
  if (belief.stage != Stage::Predicted) {
    throw InvalidInput("update: belief must be in predicted stage");
  }
  if (z.size() != model.dim_z || belief.mean.size() != model.dim_x) {
    throw InvalidInput("update: dimension mismatch");
  }
  StepDiagnostics d;
  d.predicted_obs = model.H * belief.mean;
  d.innovation = z - d.predicted_obs;
  d.innovation_cov =
      symmetrized(model.R_delta + model.H * belief.cov * model.H.transpose());
  Eigen::LLT<Mat> llt(d.innovation_cov);
  if (llt.info() != Eigen::Success) {
    throw IllConditionedUpdate("update: innovation covariance not positive definite");
  }
  // K = P H^T S^-1 via solve rather than explicit inverse.
  d.gain = llt.solve(model.H * belief.cov).transpose();
  d.nis = d.innovation.dot(llt.solve(d.innovation));

  GaussianBelief out;
  out.mean = belief.mean + d.gain * d.innovation;
  // Joseph form keeps the covariance symmetric PSD over long runs.
  const Mat ikh = Mat::Identity(model.dim_x, model.dim_x) - d.gain * model.H;
  out.cov = symmetrized(ikh * belief.cov * ikh.transpose() +
                        d.gain * model.R_delta * d.gain.transpose());
  out.t = belief.t;
  out.stage = Stage::Updated;
  return {out, d};
}

std::vector<FilterStep> run_filter(
    const LinearModel& model,
    const std::vector<std::pair<double, Vec>>& observations) {
  if (observations.empty()) {
    throw InvalidInput("run_filter: empty observation sequence");
  }
  const std::size_t n = observations.size();
  if (n > 1) {
    const double dt0 = observations[1].first - observations[0].first;
    if (dt0 <= 0.0) throw InvalidInput("run_filter: times must be increasing");
    for (std::size_t k = 1; k < n; ++k) {
      const double dt = observations[k].first - observations[k - 1].first;
      if (std::abs(dt - dt0) > 1e-9 * dt0) {
        throw InvalidInput("run_filter: observations must be uniformly spaced");
      }
    }
  }

  std::vector<FilterStep> out;
  out.reserve(n);

  GaussianBelief belief = initialize(model, observations[0].second,
                                     observations[0].first);
  FilterStep first;
  first.belief = belief;
  first.diag.innovation = Vec::Zero(model.dim_z);
  first.diag.innovation_cov =
      symmetrized(model.R_delta + model.H * belief.cov * model.H.transpose());
  first.diag.gain = Mat::Zero(model.dim_x, model.dim_z);
  first.diag.nis = 0.0;
  first.diag.predicted_obs = model.H * belief.mean;
  out.push_back(std::move(first));

  // Time-invariant models reuse one propagator; periodic time-varying models
  // reuse one per step slot within the period.
  std::vector<Propagator> cache;
  const bool periodic = !model.time_invariant && model.period_steps > 0;
  if (model.time_invariant && n > 1) {
    cache.push_back(propagator(model, observations[0].first, observations[1].first));
  } else if (periodic) {
    cache.resize(model.period_steps);
  }

  for (std::size_t k = 1; k < n; ++k) {
    const double t_prev = observations[k - 1].first;
    const double t_next = observations[k].first;
    Propagator prop;
    if (model.time_invariant) {
      prop = cache[0];
      prop.t_begin = t_prev;
      prop.t_end = t_next;
    } else if (periodic) {
      const int slot = static_cast<int>((k - 1) % model.period_steps);
      if (cache[slot].phi.size() == 0) {
        cache[slot] = propagator(model, t_prev, t_next);
      }
      prop = cache[slot];
      prop.t_begin = t_prev;
      prop.t_end = t_next;
    } else {
      prop = propagator(model, t_prev, t_next);
    }
    belief.t = t_prev;  // guard against accumulated roundoff in the grid
    GaussianBelief predicted = predict(belief, prop);
    auto [updated, diag] = update(predicted, model, observations[k].second);
    belief = updated;
    FilterStep step;
    step.belief = belief;
    step.diag = std::move(diag);
    out.push_back(std::move(step));
  }
  return out;
}

std::vector<FilterStep> run_filter(const LinearModel& model,
                                   const std::vector<double>& z, double t0) {
  std::vector<std::pair<double, Vec>> obs;
  obs.reserve(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    Vec zk(1);
    zk(0) = z[k];
    obs.emplace_back(t0 + static_cast<double>(k) * model.delta, zk);
  }
  return run_filter(model, obs);
}

}  // namespace atomsense
