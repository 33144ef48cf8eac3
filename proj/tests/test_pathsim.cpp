#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gexp/pathsim.hpp"
#include "gexp/stats.hpp"

using namespace gexp;

namespace {

const TimeGrid kGrid{64};

SimpleIntegrand endpoint_feedback(TimeGrid g) {
  // h_k = tanh(B_k): bounded, adapted, path dependent
  SimpleIntegrand h;
  h.grid = g;
  h.dim = 1;
  h.h_max = 1.0;
  h.step = [](const SamplePath& p, int k, double* out) {
    out[0] = std::tanh(p.b(k));
  };
  h.descriptor = "tanh(B_k)";
  return h;
}

ThetaSet theta2() {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2), b(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 2.0;
  b << 1.0, 0.3, 0.0, 0.9;
  return ThetaSet::finite_set({a, b});
}

ControlProcess switching_control2(const ThetaSet& t, TimeGrid g) {
  // picks between the two matrices from the sign of B^1 (feedback)
  ControlProcess c;
  c.grid = g;
  c.dim = 2;
  c.feedback = [m0 = t.finite().mats[0], m1 = t.finite().mats[1]](
                   const SamplePath& p, int k, double* out) {
    const Eigen::MatrixXd& m = p.b(k, 0) >= 0.0 ? m0 : m1;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) out[i * 2 + j] = m(i, j);
  };
  c.descriptor = "sign-switch";
  return c;
}

}  // namespace

TEST(Pathsim, IdentityControlQvExact) {
  const ThetaSet t = ThetaSet::finite_set({Eigen::MatrixXd::Identity(2, 2)});
  ControlProcess c =
      ControlProcess::constant(kGrid, 2, {1.0, 0.0, 0.0, 1.0}, "I");
  SamplePath p;
  simulate_path(p, t, c, kGrid, 1, 0);
  EXPECT_DOUBLE_EQ(p.qv(kGrid.M, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(p.qv(kGrid.M, 1, 1), 1.0);
  EXPECT_DOUBLE_EQ(p.qv(kGrid.M, 0, 1), 0.0);
  EXPECT_DOUBLE_EQ(p.b(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(p.qv(0, 0, 0), 0.0);
}

TEST(Pathsim, MartingaleMeanAndVariance) {
  const double sigma = 0.8;
  const ThetaSet t = ThetaSet::scalar_interval(sigma, sigma);
  const ControlProcess c = ControlProcess::constant1(kGrid, sigma);
  RunningStats end;
  const long n = 100000;
  SamplePath p;
  for (long i = 0; i < n; ++i) {
    simulate_path(p, t, c, kGrid, 21, i);
    end.add(p.b(kGrid.M));
  }
  EXPECT_NEAR(end.mean(), 0.0, 3.0 * sigma / std::sqrt(double(n)));
  EXPECT_NEAR(end.variance(), sigma * sigma, 0.05 * sigma * sigma);
}

TEST(Pathsim, Reproducible) {
  const ThetaSet t = ThetaSet::scalar_interval(0.5, 1.0);
  const ControlProcess c = ControlProcess::constant1(kGrid, 0.7);
  SamplePath a, b;
  simulate_path(a, t, c, kGrid, 5, 17);
  simulate_path(b, t, c, kGrid, 5, 17);
  EXPECT_EQ(a.B, b.B);
  EXPECT_EQ(a.dW, b.dW);
  EXPECT_EQ(a.QV, b.QV);
  simulate_path(b, t, c, kGrid, 5, 18);
  EXPECT_NE(a.B, b.B);
}

TEST(Pathsim, ControlOutsideThetaRejected) {
  const ThetaSet t = ThetaSet::scalar_interval(0.5, 1.0);
  const ControlProcess c = ControlProcess::constant1(kGrid, 1.4);
  SamplePath p;
  EXPECT_THROW(simulate_path(p, t, c, kGrid, 1, 0), std::domain_error);
}

TEST(Pathsim, ItoIntegralTrivial) {
  const ThetaSet t = ThetaSet::scalar_interval(0.5, 1.0);
  const ControlProcess c = ControlProcess::constant1(kGrid, 0.9);
  SamplePath p;
  simulate_path(p, t, c, kGrid, 3, 2);
  EXPECT_DOUBLE_EQ(ito_integral(SimpleIntegrand::zero(kGrid, 1), p), 0.0);
  const SimpleIntegrand one = SimpleIntegrand::deterministic(
      kGrid, 1, std::vector<double>(kGrid.M, 1.0), "one");
  EXPECT_NEAR(ito_integral(one, p), p.b(kGrid.M), 1e-12);
}

TEST(Pathsim, ItoIsometryUnderFixedTheta) {
  const ThetaSet t = ThetaSet::scalar_interval(0.5, 1.0);
  const ControlProcess c = ControlProcess::constant1(kGrid, 1.0);
  const SimpleIntegrand h = endpoint_feedback(kGrid);
  RunningStats sq, qf;
  SamplePath p;
  for (long i = 0; i < 20000; ++i) {
    simulate_path(p, t, c, kGrid, 31, i);
    const double ito = ito_integral(h, p);
    sq.add(ito * ito);
    qf.add(qv_integrals(h, p).quad_form);
  }
  const double tol =
      3.0 * pooled_stderr(sq.stderr_of_mean(), qf.stderr_of_mean());
  EXPECT_NEAR(sq.mean(), qf.mean(), tol);
}

TEST(Pathsim, QvIntegralsConstantIntegrand) {
  const ThetaSet t = ThetaSet::finite_set({Eigen::MatrixXd::Identity(2, 2)});
  const ControlProcess c =
      ControlProcess::constant(kGrid, 2, {1.0, 0.0, 0.0, 1.0}, "I");
  SamplePath p;
  simulate_path(p, t, c, kGrid, 4, 0);
  std::vector<double> v(static_cast<size_t>(kGrid.M) * 2);
  for (int k = 0; k < kGrid.M; ++k) {
    v[2 * k] = 0.3;
    v[2 * k + 1] = -0.4;
  }
  const auto q =
      qv_integrals(SimpleIntegrand::deterministic(kGrid, 2, v, "v"), p);
  // identity QV: the vector path is t*v and the quadratic form |v|^2
  EXPECT_NEAR(q.vector_path[2 * kGrid.M], 0.3, 1e-12);
  EXPECT_NEAR(q.vector_path[2 * kGrid.M + 1], -0.4, 1e-12);
  EXPECT_NEAR(q.quad_form, 0.25, 1e-12);
}

TEST(Pathsim, QuadFormWithinQvSandwich) {
  const ThetaSet t = theta2();
  const ControlProcess c = switching_control2(t, kGrid);
  const double s0 = t.sigma0(), s1 = t.sigma1();
  SamplePath p;
  for (long i = 0; i < 50; ++i) {
    simulate_path(p, t, c, kGrid, 6, i);
    SimpleIntegrand h;
    h.grid = kGrid;
    h.dim = 2;
    h.h_max = 1.0;
    h.step = [](const SamplePath& q, int k, double* out) {
      out[0] = std::cos(q.b(k, 1));
      out[1] = std::sin(q.b(k, 0));
    };
    const auto q = qv_integrals(h, p);
    std::vector<double> xi;
    eval_integrand(h, p, xi);
    double n2 = 0.0;
    for (double x : xi) n2 += x * x;
    n2 *= kGrid.dt();
    EXPECT_GE(q.quad_form, s0 * s0 * n2 - 1e-12);
    EXPECT_LE(q.quad_form, s1 * s1 * n2 + 1e-12);
  }
}

TEST(Pathsim, ShiftPathIsExactlyInvertible) {
  const ThetaSet t = ThetaSet::scalar_interval(0.5, 1.0);
  const ControlProcess c = ControlProcess::constant1(kGrid, 0.8);
  const SimpleIntegrand h = endpoint_feedback(kGrid);
  SamplePath p;
  simulate_path(p, t, c, kGrid, 7, 1);

  const SamplePath same = shift_path(SimpleIntegrand::zero(kGrid, 1), p);
  EXPECT_EQ(same.B, p.B);

  // freeze the xi values of h along the shifted path, then undo the shift
  const SamplePath up = shift_path(h, p);
  std::vector<double> xi;
  eval_integrand(h, p, xi);
  for (double& x : xi) x = -x;
  const SamplePath down = shift_path(
      SimpleIntegrand::deterministic(kGrid, 1, xi, "-h"), up);
  for (int k = 0; k <= kGrid.M; ++k) EXPECT_NEAR(down.b(k), p.b(k), 1e-12);
  EXPECT_EQ(up.QV, p.QV);  // the shift never touches the quadratic variation
}

TEST(Pathsim, ShiftPathConstantDirection) {
  const ThetaSet t = ThetaSet::finite_set({Eigen::MatrixXd::Identity(2, 2)});
  const ControlProcess c =
      ControlProcess::constant(kGrid, 2, {1.0, 0.0, 0.0, 1.0}, "I");
  SamplePath p;
  simulate_path(p, t, c, kGrid, 8, 0);
  std::vector<double> v(static_cast<size_t>(kGrid.M) * 2);
  for (int k = 0; k < kGrid.M; ++k) {
    v[2 * k] = 1.5;
    v[2 * k + 1] = -0.5;
  }
  const SamplePath s =
      shift_path(SimpleIntegrand::deterministic(kGrid, 2, v, "v"), p);
  for (int k = 0; k <= kGrid.M; ++k) {
    const double tk = kGrid.t(k);
    EXPECT_NEAR(s.b(k, 0), p.b(k, 0) + 1.5 * tk, 1e-12);
    EXPECT_NEAR(s.b(k, 1), p.b(k, 1) - 0.5 * tk, 1e-12);
  }
}

TEST(Pathsim, GirsanovDensityBasics) {
  const ThetaSet t = ThetaSet::scalar_interval(0.5, 1.0);
  const ControlProcess c = ControlProcess::constant1(kGrid, 0.9);
  SamplePath p;
  simulate_path(p, t, c, kGrid, 9, 0);
  EXPECT_DOUBLE_EQ(girsanov_density(SimpleIntegrand::zero(kGrid, 1), p), 1.0);

  SimpleIntegrand unbounded = endpoint_feedback(kGrid);
  unbounded.h_max = std::numeric_limits<double>::infinity();
  EXPECT_THROW(girsanov_density(unbounded, p), std::invalid_argument);
}

TEST(Pathsim, GirsanovDensityMeanOneAndMomentBound) {
  const ThetaSet t = ThetaSet::scalar_interval(0.5, 1.0);
  const ControlProcess c = ControlProcess::constant1(kGrid, 1.0);
  const SimpleIntegrand h = endpoint_feedback(kGrid);
  RunningStats mean1, mom2;
  SamplePath p;
  for (long i = 0; i < 50000; ++i) {
    simulate_path(p, t, c, kGrid, 10, i);
    const double d = girsanov_density(h, p);
    mean1.add(d);
    mom2.add(d * d);
  }
  EXPECT_NEAR(mean1.mean(), 1.0, 3.0 * mean1.stderr_of_mean());
  const double bound =
      std::exp(t.sigma1() * t.sigma1() * h.h_max * h.h_max) * 1.05;
  EXPECT_LE(mom2.mean(), bound);
}

TEST(Pathsim, AdaptednessAudit) {
  const ThetaSet t = ThetaSet::scalar_interval(0.5, 1.0);
  const ControlProcess c = ControlProcess::constant1(kGrid, 0.8);
  const SimpleIntegrand h = endpoint_feedback(kGrid);
  SamplePath p;
  simulate_path(p, t, c, kGrid, 11, 3);
  const int cut = kGrid.M / 2;
  SamplePath mut = p;  // corrupt everything strictly after the cut
  for (int k = cut + 1; k <= kGrid.M; ++k) {
    mut.B[static_cast<size_t>(k)] += 100.0 + k;
    mut.QV[static_cast<size_t>(k)] += 7.0;
  }
  std::vector<double> xa, xb;
  eval_integrand(h, p, xa);
  eval_integrand(h, mut, xb);
  for (int k = 0; k <= cut; ++k) EXPECT_EQ(xa[k], xb[k]);
}

TEST(Pathsim, McMeanWorkerCountIrrelevant) {
  const ThetaSet t = ThetaSet::scalar_interval(0.5, 1.0);
  const ControlProcess c = ControlProcess::constant1(kGrid, 0.9);
  const auto f = [](const SamplePath& p) { return std::tanh(p.b(p.grid.M)); };
  const auto a = mc_mean(t, c, 5000, 13, 1, f);
  const auto b = mc_mean(t, c, 5000, 13, 3, f);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.stderr_, b.stderr_);
}

TEST(Pathsim, McMeanRejectsNonFinite) {
  const ThetaSet t = ThetaSet::scalar_interval(0.5, 1.0);
  const ControlProcess c = ControlProcess::constant1(kGrid, 0.9);
  const auto f = [](const SamplePath& p) {
    return 1.0 / (p.b(0));  // B_0 = 0: division by zero on every path
  };
  EXPECT_THROW(mc_mean(t, c, 8, 13, 1, f), std::runtime_error);
}
