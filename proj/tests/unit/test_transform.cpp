#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ddelyap/transform.hpp"

using namespace ddelyap;

namespace {

double simpson(const std::function<double(double)>& g) {
  // composite Simpson with 2000 panels
  const int n = 2000;
  double acc = g(0.0) + g(1.0);
  for (int k = 1; k < n; ++k) acc += (k % 2 ? 4.0 : 2.0) * g(double(k) / n);
  return acc / (3.0 * n);
}

}  // namespace

TEST(Coefficients, LinearIsExact) {
  const auto sys = cyclic_linear(1, {0.7, 1.3}, {2.0, -0.5}, -1);
  for (int order : {1, 4, 8}) {
    EXPECT_DOUBLE_EQ(coefficient_a(sys, 0, 0.0, 0.3, -0.2, order), -0.7);
    EXPECT_DOUBLE_EQ(coefficient_b(sys, 0, 0.0, 0.5, order), 2.0);
    EXPECT_DOUBLE_EQ(coefficient_b(sys, 1, 0.0, 1e-6, order), -0.5);
  }
}

TEST(Coefficients, CubicMeanValue) {
  CyclicSystem sys({Coupling{[](double, double u, double v) { return -u * u * u + v; },
                             [](double, double u, double) { return -3 * u * u; },
                             [](double, double, double) { return 1.0; }}},
                   1);
  const double exact = simpson([](double h) { return -3 * h * h; });
  EXPECT_NEAR(exact, -1.0, 1e-12);
  EXPECT_NEAR(coefficient_a(sys, 0, 0.0, 1.0, 0.4), exact, 1e-12);
  EXPECT_NEAR(coefficient_a(sys, 0, 0.0, 1e-4, 0.4), -1e-8, 1e-20);  // -u^2
}

TEST(Coefficients, ZeroArgumentGivesDerivative) {
  const auto sys = cyclic_saturating(0, {1.0}, {-2.0}, -1);
  EXPECT_NEAR(coefficient_b(sys, 0, 0.0, 0.0), sys.d3(0, 0.0, 0.0, 0.0), 1e-12);
}

TEST(ToY, ZeroCoefficientIsIdentity) {
  // x' = x(t - 1): a_0 = 0
  CyclicSystem sys({Coupling{[](double, double, double v) { return v; }, {}, {}}}, 1);
  const auto init = SegmentFunction::from_function(DomainK(1.0, 0), [](double s) { return 1.0 + s; },
                                                   [](double) { return 1.0; }, {});
  const auto traj = integrate(sys, ConstantDelay{1.0}, init, 0.0, 3.0);
  const auto y = to_y(sys, traj);
  for (double t : {0.0, 0.7, 1.9, 3.0}) EXPECT_NEAR(y.value(0, t), traj.x0(t), 1e-14);
  std::vector<double> grid(traj.knots().begin(), traj.knots().end());
  EXPECT_LE(residual_linear_system(y, grid).max_relative_residual, 1e-8);
}

TEST(ToY, ExponentialCancels) {
  CyclicSystem sys({Coupling{[](double, double u, double) { return 2 * u; }, {}, {}}}, 1);
  const auto init = SegmentFunction::from_function(DomainK(1.0, 0), [](double s) { return std::exp(2 * s); },
                                                   [](double s) { return 2 * std::exp(2 * s); }, {});
  StepConfig cfg;
  cfg.tol = 1e-11;
  const auto traj = integrate(sys, ConstantDelay{1.0}, init, 0.0, 2.0, cfg);
  const auto y = to_y(sys, traj);
  for (double t : {0.0, 0.5, 1.0, 2.0}) EXPECT_NEAR(y.value(0, t), 1.0, 1e-8);
}

TEST(ToY, ZeroSolutionHasZeroResidual) {
  const auto sys = cyclic_saturating(1, {1.0, 0.5}, {1.0, -2.0}, -1);
  const auto zero = SegmentFunction::from_function(DomainK(1.0, 1), [](double) { return 0.0; },
                                                   [](double) { return 0.0; }, {0.0}, 4);
  const auto traj = integrate(sys, ConstantDelay{1.0}, zero, 0.0, 3.0);
  const auto y = to_y(sys, traj);
  std::vector<double> grid(traj.knots().begin(), traj.knots().end());
  EXPECT_EQ(residual_linear_system(y, grid).max_residual, 0.0);
}

TEST(ToY, SaturatingResidualAndSigns) {
  const auto sys = cyclic_saturating(1, {1.0, 0.5}, {1.0, -2.0}, -1, 0.2, 1.5);
  const auto init = SegmentFunction::from_function(
      DomainK(1.0, 1), [](double s) { return 2.0 * std::cos(2 * s) - 0.3; },
      [](double s) { return -4.0 * std::sin(2 * s); }, {1.5});
  const auto traj = integrate(sys, ConstantDelay{1.0}, init, 0.0, 12.0);
  const auto y = to_y(sys, traj);
  std::vector<double> grid(traj.knots().begin(), traj.knots().end());
  EXPECT_LE(residual_linear_system(y, grid).max_relative_residual, 50 * 1e-8);
  for (double t = 1.0; t <= 12.0; t += 0.5) EXPECT_TRUE(sign_agreement(segment_at(traj, t), y_segment_at(y, t)));
}

TEST(SignAgreement, OppositeConstants) {
  auto c = [](double v) {
    return SegmentFunction::from_function(DomainK(1.0, 0), [v](double) { return v; },
                                          [](double) { return 0.0; }, {}, 4);
  };
  EXPECT_FALSE(sign_agreement(c(1.0), c(-1.0)));
  EXPECT_TRUE(sign_agreement(c(1.0), c(3.0)));
}
