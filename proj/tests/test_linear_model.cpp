#include <doctest.h>

#include <cmath>

#include "atomsense/linalg.hpp"
#include "atomsense/linear_model.hpp"
#include "atomsense/rng.hpp"

using namespace atomsense;

namespace {

// paper-scale constants reused across cases
constexpr double kOmegaL = 2.0 * M_PI * 1.0e4;
constexpr double kT2 = 8.744777092961283e-4;  // 1/(2 pi 182 Hz)
constexpr double kDelta = 5.0e-6;

Mat random_stable_f(CounterRng& rng, int n) {
  Mat f(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) f(i, j) = 2.0 * rng.next_gaussian();
  f -= (n + 2.0) * Mat::Identity(n, n);  // push the spectrum left
  return f;
}

LinearModel sensor_like_time_varying(double g_p, int n_sub,
                                     PropagatorOrder order) {
  const double kappa = 100.0;
  const double w_p = kOmegaL;
  GeneratorFn f = [=](double t) {
    Mat m = Mat::Zero(4, 4);
    m(0, 0) = -1.0 / kT2;
    m(0, 1) = kOmegaL;
    m(1, 0) = -kOmegaL;
    m(1, 1) = -1.0 / kT2;
    m(1, 2) = g_p * std::cos(w_p * t);
    m(1, 3) = g_p * std::sin(w_p * t);
    m(2, 2) = -kappa;
    m(3, 3) = -kappa;
    return m;
  };
  Vec qdiag(4);
  qdiag << 1.0, 1.0, 0.5, 0.5;
  Mat h = Mat::Zero(1, 4);
  h(0, 1) = 1.0;
  Mat r(1, 1);
  r(0, 0) = 1.0;
  return make_time_varying_model(4, f, Mat::Identity(4, 4), qdiag.asDiagonal(),
                                 h, r, kDelta, n_sub, order);
}

}  // namespace

TEST_CASE("transition_matrix: zero generator gives the identity") {
  const Mat f = Mat::Zero(4, 4);
  CHECK((transition_matrix(f, 1.0) - Mat::Identity(4, 4)).norm() == 0.0);
}

TEST_CASE("transition_matrix: quarter Larmor period is a quarter turn") {
  Mat f(2, 2);
  f << 0.0, kOmegaL, -kOmegaL, 0.0;
  const Mat phi = transition_matrix(f, 2.5e-5);
  Mat expected(2, 2);
  expected << 0.0, 1.0, -1.0, 0.0;
  CHECK((phi - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("transition_matrix: damped rotation matches the commuting closed form") {
  Mat f(2, 2);
  f << -1.0 / kT2, kOmegaL, -kOmegaL, -1.0 / kT2;
  const Mat phi = transition_matrix(f, kDelta);
  // decay and rotation commute, so exp splits exactly
  const double scale = std::exp(-kDelta / kT2);
  const double angle = kOmegaL * kDelta;
  CHECK(scale == doctest::Approx(0.9942986162998491).epsilon(1e-12));
  CHECK(angle == doctest::Approx(0.3141592653589793).epsilon(1e-12));
  Mat oracle(2, 2);
  oracle << scale * std::cos(angle), scale * std::sin(angle),
      -scale * std::sin(angle), scale * std::cos(angle);
  CHECK((phi - oracle).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("transition_matrix: invalid inputs are rejected") {
  Mat f(2, 2);
  f.setZero();
  f(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(transition_matrix(f, 1.0), InvalidInput);
  CHECK_THROWS_AS(transition_matrix(Mat::Zero(2, 2), -1.0), InvalidInput);
}

TEST_CASE("discretize_noise: zero generator integrates to Q * delta") {
  Vec q(4);
  q << 1.0, 2.0, 3.0, 4.0;
  const Mat qd = discretize_noise(Mat::Zero(4, 4), Mat::Identity(4, 4),
                                  q.asDiagonal(), kDelta);
  CHECK((qd - kDelta * Mat(q.asDiagonal())).cwiseAbs().maxCoeff() < 1e-18);
}

TEST_CASE("discretize_noise: scalar OU closed form") {
  // int_0^D e^{-2 a s} q ds = q (1 - e^{-2 a D}) / (2 a)
  const double a = 100.0, q = 0.7, d = 0.01;
  Mat f(1, 1), g(1, 1), qm(1, 1);
  f(0, 0) = -a;
  g(0, 0) = 1.0;
  qm(0, 0) = q;
  const double oracle = q * (1.0 - std::exp(-2.0 * a * d)) / (2.0 * a);
  CHECK(oracle == doctest::Approx(q * 4.3233235838169365e-3).epsilon(1e-12));
  CHECK(discretize_noise(f, g, qm, d)(0, 0) ==
        doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("discretize_noise: output is symmetric PSD for random inputs") {
  CounterRng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 3);
    const Mat f = random_stable_f(rng, n);
    Vec q(n);
    for (int i = 0; i < n; ++i) q(i) = std::abs(rng.next_gaussian());
    const Mat qd =
        discretize_noise(f, Mat::Identity(n, n), q.asDiagonal(), 0.01);
    CHECK((qd - qd.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Mat> es(qd);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12 * qd.norm());
  }
}

TEST_CASE("discretize_noise: rejects nonpositive intervals") {
  CHECK_THROWS_AS(
      discretize_noise(Mat::Zero(2, 2), Mat::Identity(2, 2), Mat::Identity(2, 2), 0.0),
      InvalidInput);
}

TEST_CASE("discretize_noise: first-order limit Q_delta / delta -> G Q G^T") {
  CounterRng rng(7);
  const Mat f = random_stable_f(rng, 3);
  Mat g(3, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) g(i, j) = rng.next_gaussian();
  Vec q(2);
  q << 1.3, 0.4;
  const Mat gqgt = g * q.asDiagonal() * g.transpose();
  double err[2];
  const double deltas[2] = {1e-6, 1e-7};
  for (int i = 0; i < 2; ++i) {
    const Mat qd = discretize_noise(f, g, q.asDiagonal(), deltas[i]);
    err[i] = (qd / deltas[i] - gqgt).norm() / gqgt.norm();
  }
  CHECK(err[0] / err[1] == doctest::Approx(10.0).epsilon(0.3));
}

TEST_CASE("propagator: time-invariant models give one propagator per spacing") {
  CounterRng rng(3);
  const Mat f = random_stable_f(rng, 4);
  Vec q = Vec::Ones(4);
  Mat h = Mat::Zero(1, 4);
  h(0, 0) = 1.0;
  Mat r(1, 1);
  r(0, 0) = 0.5;
  const LinearModel m = make_time_invariant_model(
      f, Mat::Identity(4, 4), q.asDiagonal(), h, r, kDelta);
  const Propagator p1 = propagator(m, 0.0, kDelta);
  const Propagator p2 = propagator(m, 17.0 * kDelta, 18.0 * kDelta);
  CHECK((p1.phi - p2.phi).norm() == 0.0);
  CHECK((p1.q_delta - p2.q_delta).norm() == 0.0);
}

TEST_CASE("propagator: semigroup composition for time-invariant models") {
  CounterRng rng(11);
  const Mat f = random_stable_f(rng, 3);
  Vec q(3);
  q << 0.5, 1.0, 2.0;
  Mat h = Mat::Zero(1, 3);
  h(0, 0) = 1.0;
  Mat r = Mat::Identity(1, 1);
  const LinearModel m = make_time_invariant_model(
      f, Mat::Identity(3, 3), q.asDiagonal(), h, r, 1e-3);
  const Propagator pab = propagator(m, 0.0, 1e-3);
  const Propagator pbc = propagator(m, 1e-3, 3e-3);
  const Propagator pac = propagator(m, 0.0, 3e-3);
  CHECK((pbc.phi * pab.phi - pac.phi).norm() / pac.phi.norm() < 1e-10);
  const Mat q_comp = pbc.phi * pab.q_delta * pbc.phi.transpose() + pbc.q_delta;
  CHECK((q_comp - pac.q_delta).norm() / pac.q_delta.norm() < 1e-10);
}

TEST_CASE("propagator: rejects empty intervals") {
  const LinearModel m = make_time_invariant_model(
      Mat::Zero(2, 2), Mat::Identity(2, 2), Mat::Identity(2, 2),
      Mat::Identity(1, 2), Mat::Identity(1, 1), 1e-3);
  CHECK_THROWS_AS(propagator(m, 1.0, 1.0), InvalidInput);
}

TEST_CASE("propagator: commuting time-varying generator matches exp of the integral") {
  // F(t) = a(t) M with fixed M commutes with itself at all times.
  Mat base(2, 2);
  base << -1.0, 0.5, 0.5, -2.0;
  GeneratorFn f = [base](double t) { return Mat(std::sin(t) * base); };
  Mat h = Mat::Identity(1, 2);
  h(0, 1) = 0.0;
  const LinearModel m = make_time_varying_model(
      2, f, Mat::Identity(2, 2), 0.1 * Mat::Identity(2, 2), h.topRows(1),
      Mat::Identity(1, 1), 0.2, 64, PropagatorOrder::Gauss4);
  const double t0 = 0.3, t1 = 0.5;
  const Propagator p = propagator(m, t0, t1);
  const double integral = std::cos(t0) - std::cos(t1);
  const Mat oracle = matrix_exponential(base, integral);
  CHECK((p.phi - oracle).norm() / oracle.norm() < 1e-12);
}

TEST_CASE("propagator: midpoint rule converges at second order in n_sub") {
  // Richardson comparison against a 256-substep reference.
  const double g_p = 2.5e4;
  const LinearModel oracle_model =
      sensor_like_time_varying(g_p, 256, PropagatorOrder::Midpoint);
  const Mat phi_ref = propagator(oracle_model, 0.0, kDelta).phi;

  double err[3];
  const int subs[3] = {1, 4, 16};
  for (int i = 0; i < 3; ++i) {
    const LinearModel m =
        sensor_like_time_varying(g_p, subs[i], PropagatorOrder::Midpoint);
    err[i] = (propagator(m, 0.0, kDelta).phi - phi_ref).norm() / phi_ref.norm();
  }
  CHECK(err[0] / err[1] == doctest::Approx(16.0).epsilon(0.4));
  CHECK(err[1] / err[2] == doctest::Approx(16.0).epsilon(0.4));
  // at calibrated coupling the n_sub = 1 vs 16 discrepancy is already tiny
  CHECK(err[0] < 1e-6);
}

TEST_CASE("propagator: Gauss4 rule tracks the midpoint oracle far inside 1e-10") {
  const double g_p = 2.5e4;
  const LinearModel fine =
      sensor_like_time_varying(g_p, 4096, PropagatorOrder::Midpoint);
  const Propagator ref = propagator(fine, 0.0, kDelta);
  const LinearModel m =
      sensor_like_time_varying(g_p, 8, PropagatorOrder::Gauss4);
  const Propagator p = propagator(m, 0.0, kDelta);
  CHECK((p.phi - ref.phi).norm() / ref.phi.norm() < 1e-10);
  CHECK((p.q_delta - ref.q_delta).norm() / ref.q_delta.norm() < 1e-9);
}

TEST_CASE("model construction rejects inconsistent inputs") {
  const Mat eye2 = Mat::Identity(2, 2);
  CHECK_THROWS_AS(make_time_invariant_model(Mat::Zero(2, 2), eye2, eye2,
                                            Mat::Identity(1, 2), Mat::Zero(1, 1),
                                            1e-3),
                  InvalidInput);  // singular R_delta
  CHECK_THROWS_AS(make_time_invariant_model(Mat::Zero(2, 2), eye2, -eye2,
                                            Mat::Identity(1, 2),
                                            Mat::Identity(1, 1), 1e-3),
                  InvalidInput);  // Q not PSD
  CHECK_THROWS_AS(make_time_invariant_model(Mat::Zero(2, 2), eye2, eye2,
                                            Mat::Identity(1, 2),
                                            Mat::Identity(1, 1), 0.0),
                  InvalidInput);  // delta <= 0
  CHECK_THROWS_AS(make_time_invariant_model(Mat::Zero(2, 3), eye2, eye2,
                                            Mat::Identity(1, 2),
                                            Mat::Identity(1, 1), 1e-3),
                  InvalidInput);  // F not square
}
