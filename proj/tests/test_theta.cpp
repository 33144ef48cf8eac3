#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "gexp/theta.hpp"
#include "oracles.hpp"

using gexp::ThetaSet;

namespace {

Eigen::MatrixXd m1(double a) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = a;
  return m;
}

Eigen::MatrixXd diag2(double a, double b) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

Eigen::MatrixXd random_sym(int d, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = u(rng);
  return Eigen::MatrixXd(0.5 * (m + m.transpose()));
}

}  // namespace

TEST(Theta, SigmaBoundsScalarInterval) {
  const ThetaSet t = ThetaSet::scalar_interval(0.5, 1.0);
  EXPECT_DOUBLE_EQ(t.sigma0(), 0.5);
  EXPECT_DOUBLE_EQ(t.sigma1(), 1.0);
  EXPECT_EQ(t.dim(), 1);
}

TEST(Theta, SigmaBoundsIdentity) {
  const ThetaSet t =
      ThetaSet::finite_set({Eigen::MatrixXd::Identity(2, 2)});
  EXPECT_NEAR(t.sigma0(), 1.0, 1e-12);
  EXPECT_NEAR(t.sigma1(), 1.0, 1e-12);
}

TEST(Theta, SigmaBoundsFiniteSetAgainstSphereScan) {
  const ThetaSet t = ThetaSet::finite_set({diag2(1, 2), diag2(2, 1)});
  // dense scan of x.(gg*)x over the unit circle and both matrices
  double lo2 = 1e300, hi2 = 0.0;
  for (const auto& g : {diag2(1, 2), diag2(2, 1)}) {
    const Eigen::MatrixXd gg = g * g.transpose();
    double mn = 1e300, mx = 0.0;
    for (int i = 0; i < 720; ++i) {
      const double a = i * std::numbers::pi / 360.0;
      Eigen::Vector2d x(std::cos(a), std::sin(a));
      const double q = x.dot(gg * x);
      mn = std::min(mn, q);
      mx = std::max(mx, q);
    }
    lo2 = std::min(lo2, mn);
    hi2 = std::max(hi2, mx);
  }
  EXPECT_NEAR(t.sigma0(), std::sqrt(lo2), 1e-6);
  EXPECT_NEAR(t.sigma1(), std::sqrt(hi2), 1e-6);
  EXPECT_NEAR(t.sigma0(), 1.0, 1e-9);
  EXPECT_NEAR(t.sigma1(), 2.0, 1e-9);
}

TEST(Theta, ConstructionRejectsDegenerateSets) {
  EXPECT_THROW(ThetaSet::scalar_interval(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(ThetaSet::scalar_interval(0.5, 0.4), std::invalid_argument);
  EXPECT_THROW(ThetaSet::scalar_interval(0.5,
                                         std::numeric_limits<double>::infinity()),
               std::invalid_argument);
  EXPECT_THROW(ThetaSet::finite_set({}), std::invalid_argument);
  EXPECT_THROW(ThetaSet::finite_set({diag2(1, 0)}), std::invalid_argument);
  EXPECT_THROW(ThetaSet::diagonal_box({0.0, 1.0}, {1.0, 1.0}),
               std::invalid_argument);
  EXPECT_THROW(ThetaSet::diagonal_box({0.5}, {0.4}), std::invalid_argument);
}

TEST(Theta, GeneratorScalarIntervalExamples) {
  const ThetaSet t = ThetaSet::scalar_interval(0.5, 1.0);
  EXPECT_DOUBLE_EQ(t.generator(m1(0.0)), 0.0);
  // independent 1-d scans over gamma of 1/2 a gamma^2
  const auto g_of = [&](double a) {
    return oracle::grid_max1(
               [a](double g) { return 0.5 * a * g * g; }, 0.5, 1.0)
        .value;
  };
  EXPECT_NEAR(t.generator(m1(2.0)), g_of(2.0), 1e-9);
  EXPECT_NEAR(t.generator(m1(-2.0)), g_of(-2.0), 1e-9);
  EXPECT_NEAR(t.generator(m1(2.0)), 1.0, 1e-12);
  EXPECT_NEAR(t.generator(m1(-2.0)), -0.25, 1e-12);
}

TEST(Theta, GeneratorPositiveHomogeneity) {
  std::mt19937 rng(7);
  for (const ThetaSet& t :
       {ThetaSet::scalar_interval(0.5, 1.0),
        ThetaSet::finite_set({diag2(1, 2), diag2(2, 1)}),
        ThetaSet::diagonal_box({0.5, 0.7}, {1.0, 1.5})}) {
    for (int rep = 0; rep < 5; ++rep) {
      const Eigen::MatrixXd a = random_sym(t.dim(), rng);
      for (double lam : {0.0, 0.7, 2.0}) {
        const double lhs = t.generator(lam * a);
        const double rhs = lam * t.generator(a);
        EXPECT_NEAR(lhs, rhs, 1e-12 * (1.0 + std::abs(rhs)));
      }
    }
  }
}

TEST(Theta, GeneratorSubadditive) {
  std::mt19937 rng(8);
  for (const ThetaSet& t :
       {ThetaSet::finite_set({diag2(1, 2), diag2(2, 1)}),
        ThetaSet::diagonal_box({0.5, 0.7}, {1.0, 1.5})}) {
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::MatrixXd a = random_sym(2, rng);
      const Eigen::MatrixXd b = random_sym(2, rng);
      EXPECT_LE(t.generator(a + b), t.generator(a) + t.generator(b) + 1e-12);
    }
  }
}

TEST(Theta, GeneratorMonotoneInSemidefiniteOrder) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const ThetaSet& t :
       {ThetaSet::finite_set({diag2(1, 2), diag2(2, 1)}),
        ThetaSet::diagonal_box({0.5, 0.7}, {1.0, 1.5})}) {
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::MatrixXd a = random_sym(2, rng);
      Eigen::Vector2d v(u(rng), u(rng));
      const Eigen::MatrixXd b = a + v * v.transpose();  // b - a >= 0
      EXPECT_LE(t.generator(a), t.generator(b) + 1e-12);
    }
  }
}

TEST(Theta, GeneratorTraceSandwichForPsd) {
  std::mt19937 rng(10);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const ThetaSet& t :
       {ThetaSet::finite_set({diag2(1, 2), diag2(2, 1)}),
        ThetaSet::diagonal_box({0.5, 0.7}, {1.0, 1.5})}) {
    const double s0 = t.sigma0(), s1 = t.sigma1();
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::Vector2d v(u(rng), u(rng)), w(u(rng), u(rng));
      const Eigen::MatrixXd a = v * v.transpose() + w * w.transpose();
      const double g = t.generator(a);
      EXPECT_GE(g, 0.5 * s0 * s0 * a.trace() - 1e-12);
      EXPECT_LE(g, 0.5 * s1 * s1 * a.trace() + 1e-12);
    }
  }
}

TEST(Theta, GeneratorFiniteSetMatchesBruteForce) {
  std::mt19937 rng(11);
  Eigen::MatrixXd rot(2, 2);
  rot << 1.0, 0.3, 0.0, 0.9;
  const std::vector<Eigen::MatrixXd> mats{diag2(1, 2), diag2(2, 1), rot};
  const ThetaSet t = ThetaSet::finite_set(mats);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd a = random_sym(2, rng);
    double best = -1e300;
    for (const auto& g : mats)
      best = std::max(best, 0.5 * (a * (g * g.transpose())).trace());
    EXPECT_NEAR(t.generator(a), best, 1e-12);
  }
}

TEST(Theta, GeneratorDiagonalBoxMatchesVertexEnumeration) {
  std::mt19937 rng(12);
  const std::vector<double> lo{0.5, 0.7, 0.6}, hi{1.0, 1.5, 0.9};
  const ThetaSet t = ThetaSet::diagonal_box(lo, hi);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd a = random_sym(3, rng);
    double best = -1e300;
    for (int mask = 0; mask < 8; ++mask) {
      double v = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double g = (mask >> i) & 1 ? hi[i] : lo[i];
        v += 0.5 * a(i, i) * g * g;
      }
      best = std::max(best, v);
    }
    EXPECT_NEAR(t.generator(a), best, 1e-12);
  }
}

TEST(Theta, BangBangMaximizesGenerator1) {
  for (const ThetaSet& t :
       {ThetaSet::scalar_interval(0.5, 1.0),
        ThetaSet::finite_set({m1(0.5), m1(0.8), m1(1.0)})}) {
    for (double a : {-3.0, -0.4, 0.0, 0.4, 3.0}) {
      const double g = t.bang_bang1(a);
      EXPECT_NEAR(0.5 * a * g * g, t.generator1(a), 1e-12);
    }
  }
}

TEST(Theta, GeneratorSymmetrizesInput) {
  const ThetaSet t = ThetaSet::finite_set({diag2(1, 2), diag2(2, 1)});
  Eigen::MatrixXd a(2, 2);
  a << 0.3, 1.0, -0.2, -0.5;
  const Eigen::MatrixXd s = 0.5 * (a + a.transpose());
  EXPECT_DOUBLE_EQ(t.generator(a), t.generator(s));
}
