#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gexp/gheat.hpp"
#include "gexp/upperexp.hpp"
#include "oracles.hpp"

using namespace gexp;

namespace {

const TimeGrid kGrid{100};
const ThetaSet kTheta = ThetaSet::scalar_interval(0.5, 1.0);

PathFunctional endpoint(double (*phi)(double)) {
  return [phi](const SamplePath& p) { return phi(p.b(p.grid.M)); };
}

double absmin10(double x) { return std::min(std::abs(x), 10.0); }
double neg_absmin10(double x) { return -std::min(std::abs(x), 10.0); }

// sup over constant volatility of E[phi(sigma Z)] by scan + quadrature
double const_control_sup(double (*phi)(double), bool maximize) {
  const auto value = [&](double s) {
    return oracle::smoothed(phi, 0.0, s, {0.0});
  };
  return maximize ? oracle::grid_max1(value, 0.5, 1.0, 101, 3).value
                  : oracle::grid_min1(value, 0.5, 1.0, 101, 3).value;
}

}  // namespace

TEST(Upperexp, ConstantFunctionalExact) {
  const auto family = ControlFamily::constant_grid(kTheta, kGrid, 5);
  const auto up = estimate_upper(
      kTheta, [](const SamplePath&) { return 2.5; }, family, 2000, 1);
  EXPECT_DOUBLE_EQ(up.value, 2.5);
  EXPECT_DOUBLE_EQ(up.stderr_, 0.0);
}

TEST(Upperexp, ConvexEndpointMatchesPdeAndQuadrature) {
  const auto family = ControlFamily::constant_grid(kTheta, kGrid, 21);
  const auto up =
      estimate_upper(kTheta, endpoint(absmin10), family, 100000, 3);
  const double pde = g_expectation_cylinder_1(kTheta, absmin10, 1.0, {.nx = 321});
  EXPECT_NEAR(up.value, pde, std::max(1e-2, 3.0 * up.stderr_));
  EXPECT_NEAR(up.value, const_control_sup(absmin10, true),
              std::max(1e-2, 3.0 * up.stderr_));
}

TEST(Upperexp, ConcaveEndpointSelectsSigma0) {
  const auto family = ControlFamily::constant_grid(kTheta, kGrid, 21);
  const auto up =
      estimate_upper(kTheta, endpoint(neg_absmin10), family, 100000, 3);
  // the quadrature scan puts the sup of -E min(|sigma Z|, 10) at sigma0
  const double target = const_control_sup(neg_absmin10, true);
  EXPECT_NEAR(target, -0.5 * std::sqrt(2.0 / std::numbers::pi), 1e-6);
  EXPECT_NEAR(up.value, target, 3.0 * up.stderr_);
}

TEST(Upperexp, LowerEstimateAtSigma0) {
  const auto family = ControlFamily::constant_grid(kTheta, kGrid, 21);
  const auto lo =
      estimate_lower(kTheta, endpoint(absmin10), family, 100000, 3);
  EXPECT_NEAR(lo.value, 0.5 * std::sqrt(2.0 / std::numbers::pi),
              3.0 * lo.stderr_);
  const auto up =
      estimate_upper(kTheta, endpoint(absmin10), family, 100000, 3);
  EXPECT_LE(lo.value, up.value + 3.0 * pooled_stderr(lo.stderr_, up.stderr_));
}

TEST(Upperexp, FamilyMonotoneUnderEnlargement) {
  const auto small = ControlFamily::finite_list(
      {ControlProcess::constant1(kGrid, 0.5),
       ControlProcess::constant1(kGrid, 0.75)});
  auto big = small;
  big.list.push_back(ControlProcess::constant1(kGrid, 1.0));
  const auto a = estimate_upper(kTheta, endpoint(absmin10), small, 20000, 5);
  const auto b = estimate_upper(kTheta, endpoint(absmin10), big, 20000, 5);
  EXPECT_GE(b.value, a.value - 1e-12);
}

TEST(Upperexp, ConstantShiftExact) {
  const auto family = ControlFamily::constant_grid(kTheta, kGrid, 7);
  const auto base = estimate_upper(kTheta, endpoint(absmin10), family, 20000, 9);
  const auto shifted = estimate_upper(
      kTheta,
      [](const SamplePath& p) { return absmin10(p.b(p.grid.M)) + 4.0; },
      family, 20000, 9);
  EXPECT_NEAR(shifted.value, base.value + 4.0, 1e-12);
  EXPECT_EQ(shifted.argmax, base.argmax);
}

TEST(Upperexp, EmpiricalSublinearity) {
  const auto family = ControlFamily::constant_grid(kTheta, kGrid, 11);
  const auto fx = endpoint([](double x) { return std::tanh(x); });
  const auto fy = endpoint([](double x) { return std::exp(-x * x); });
  const auto both = estimate_upper(
      kTheta,
      [](const SamplePath& p) {
        const double x = p.b(p.grid.M);
        return std::tanh(x) + std::exp(-x * x);
      },
      family, 40000, 11);
  const auto ux = estimate_upper(kTheta, fx, family, 40000, 11);
  const auto uy = estimate_upper(kTheta, fy, family, 40000, 11);
  const double se = pooled_stderr(both.stderr_, pooled_stderr(ux.stderr_, uy.stderr_));
  EXPECT_LE(both.value, ux.value + uy.value + 3.0 * se);
}

TEST(Upperexp, BlockFamilyReachesConstantOptimum) {
  const auto blocks = ControlFamily::piecewise_constant(kTheta, kGrid, 4);
  const auto up = estimate_upper(kTheta, endpoint(absmin10), blocks, 30000, 13);
  EXPECT_NEAR(up.value, const_control_sup(absmin10, true),
              std::max(1.5e-2, 4.0 * up.stderr_));
  EXPECT_FALSE(up.trace.empty());
}

TEST(Upperexp, CrossEntropyOptimizerFindsEndpointOptimum) {
  Optimizer ce;
  ce.kind = Optimizer::Kind::kCrossEntropy;
  const auto blocks = ControlFamily::piecewise_constant(kTheta, kGrid, 4, ce);
  const auto up = estimate_upper(kTheta, endpoint(absmin10), blocks, 30000, 19);
  EXPECT_NEAR(up.value, const_control_sup(absmin10, true),
              std::max(1.5e-2, 4.0 * up.stderr_));
}

TEST(Upperexp, StateFeedbackHandlesMixedConvexity) {
  // phi convex left of 0 and concave right: the optimal volatility switches
  // with the state, so feedback beats every constant control
  const auto phi = [](double x) {
    return x <= 0.0 ? std::abs(x) : std::tanh(2.0 * x);
  };
  const PathFunctional f = [phi](const SamplePath& p) {
    return phi(p.b(p.grid.M));
  };
  const auto constants = ControlFamily::constant_grid(kTheta, kGrid, 21);
  const auto feedback = ControlFamily::state_feedback_grid(
      kTheta, kGrid, 3, 7, 4.0 * kTheta.sigma1());
  const auto uc = estimate_upper(kTheta, f, constants, 30000, 17);
  const auto uf = estimate_upper(kTheta, f, feedback, 30000, 17);
  EXPECT_GE(uf.value, uc.value - 3.0 * pooled_stderr(uc.stderr_, uf.stderr_));
}

TEST(Upperexp, RejectsEmptyFamilyAndNonFinite) {
  EXPECT_THROW(ControlFamily::finite_list({}), std::invalid_argument);
  const auto family = ControlFamily::constant_grid(kTheta, kGrid, 3);
  EXPECT_THROW(estimate_upper(
                   kTheta,
                   [](const SamplePath& p) { return 1.0 / p.b(0); }, family,
                   64, 1),
               std::runtime_error);
}
