#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "ddelyap/errors.hpp"
#include "ddelyap/integrator.hpp"

using namespace ddelyap;

namespace {

constexpr double kPi = std::numbers::pi;

SegmentFunction cosine_data() {
  return SegmentFunction::from_function(
      DomainK(1.0, 0), [](double s) { return std::cos(kPi * s / 2); },
      [](double s) { return -kPi / 2 * std::sin(kPi * s / 2); }, {});
}

Trajectory wright_run(double t_end = 10.0) {
  StepConfig cfg;
  cfg.tol = 1e-10;
  return integrate(wright_linear(kPi / 2, 0.0, -1), ConstantDelay{1.0}, cosine_data(), 0.0, t_end, cfg);
}

}  // namespace

TEST(Integrate, ZeroStaysZero) {
  const auto zero = SegmentFunction::from_function(DomainK(1.0, 0), [](double) { return 0.0; },
                                                   [](double) { return 0.0; }, {}, 4);
  const auto traj = integrate(wright_linear(1.0, 0.0, -1), ConstantDelay{1.0}, zero, 0.0, 5.0);
  for (double t = 0.0; t <= 5.0; t += 0.25) EXPECT_EQ(traj.x0(t), 0.0);
}

TEST(Integrate, WrightClosedForm) {
  const auto traj = wright_run();
  EXPECT_NEAR(traj.x0(3.0), 0.0, 1e-6);
  double sup = 0.0;
  for (int k = 0; k <= 2000; ++k) {
    const double t = 10.0 * k / 2000;
    sup = std::max(sup, std::abs(traj.x0(t) - std::cos(kPi * t / 2)));
  }
  EXPECT_LT(sup, 1e-6);
}

TEST(Integrate, MatchesIndependentRk4) {
  const double mu0 = 1.0, b0 = 1.0, mu1 = 0.5, b1 = -2.0, tau = 1.0;
  auto phi = [](double s) { return 0.5 + s + 0.3 * std::sin(3 * s); };
  auto dphi = [](double s) { return 1.0 + 0.9 * std::cos(3 * s); };
  const double x1_0 = 0.2;

  // reference: RK4 with step tau/400, delayed values from Hermite interpolation of its own grid
  const int m = 400;
  const double h = tau / m;
  const int steps = 5 * m;
  std::vector<double> x0(m + steps + 1), d0(m + steps + 1), x1(m + steps + 1);
  for (int k = 0; k <= m; ++k) {
    x0[k] = phi(-tau + k * h);
    d0[k] = dphi(-tau + k * h);
  }
  x1[m] = x1_0;
  auto delayed = [&](double t) {  // x0(t - tau), t relative to 0
    const double s = (t - tau) / h + m;
    int k = std::min(static_cast<int>(std::floor(s)), m + steps - 1);
    const double u = s - k;
    const double h00 = 2 * u * u * u - 3 * u * u + 1, h10 = u * u * u - 2 * u * u + u;
    const double h01 = -2 * u * u * u + 3 * u * u, h11 = u * u * u - u * u;
    const double d1 = k + 1 == m ? dphi(0.0) : d0[k + 1];  // x0' jumps at t = 0
    return h00 * x0[k] + h10 * h * d0[k] + h01 * x0[k + 1] + h11 * h * d1;
  };
  auto rhs = [&](double t, double a, double b) {
    return std::pair{-mu0 * a + b0 * b, -mu1 * b + b1 * delayed(t)};
  };
  d0[m] = -mu0 * x0[m] + b0 * x1[m];
  for (int k = m; k < m + steps; ++k) {
    const double t = (k - m) * h;
    auto [a1, c1] = rhs(t, x0[k], x1[k]);
    auto [a2, c2] = rhs(t + h / 2, x0[k] + h / 2 * a1, x1[k] + h / 2 * c1);
    auto [a3, c3] = rhs(t + h / 2, x0[k] + h / 2 * a2, x1[k] + h / 2 * c2);
    auto [a4, c4] = rhs(t + h, x0[k] + h * a3, x1[k] + h * c3);
    x0[k + 1] = x0[k] + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4);
    x1[k + 1] = x1[k] + h / 6 * (c1 + 2 * c2 + 2 * c3 + c4);
    d0[k + 1] = -mu0 * x0[k + 1] + b0 * x1[k + 1];
  }

  const auto init = SegmentFunction::from_function(DomainK(tau, 1), phi, dphi, {x1_0}, 512);
  StepConfig cfg;
  cfg.tol = 1e-10;
  const auto traj = integrate(cyclic_linear(1, {mu0, mu1}, {b0, b1}, -1), ConstantDelay{tau}, init, 0.0, 5.0, cfg);
  for (int k = m; k <= m + steps; k += m / 4) {
    const double t = (k - m) * h;
    EXPECT_NEAR(traj.value(0, t), x0[k], 1e-7) << "t=" << t;
    EXPECT_NEAR(traj.value(1, t), x1[k], 1e-7) << "t=" << t;
  }
}

TEST(Integrate, RejectsBadArguments) {
  EXPECT_THROW(integrate(wright_linear(1, 0, -1), ConstantDelay{1.0}, cosine_data(), 1.0, 0.5), ConfigError);
  EXPECT_THROW(integrate(wright_linear(1, 0, -1), ConstantDelay{2.0}, cosine_data(), 0.0, 1.0), ConfigError);
}

TEST(SegmentAt, InitialAndWright) {
  const auto traj = wright_run(4.0);
  const auto s0 = segment_at(traj, 0.0);
  for (double s : {-1.0, -0.5, -0.25, 0.0}) EXPECT_NEAR(s0.eval(s), std::cos(kPi * s / 2), 1e-9);
  const auto s2 = segment_at(traj, 2.0);
  for (int k = 0; k <= 20; ++k) {
    const double s = -1.0 + k / 20.0;
    EXPECT_NEAR(s2.eval(s), std::cos(kPi * (2 + s) / 2), 1e-6);
  }
}

TEST(SegmentAt, ConstantSolution) {
  const auto one = SegmentFunction::from_function(DomainK(1.0, 0), [](double) { return 1.0; },
                                                  [](double) { return 0.0; }, {}, 4);
  // x' = -x + x(t - 1) keeps constants
  CyclicSystem sys({Coupling{[](double, double u, double v) { return -u + v; }, {}, {}}}, 1);
  const auto traj = integrate(sys, ConstantDelay{1.0}, one, 0.0, 3.0);
  const auto seg = segment_at(traj, 2.5);
  for (double s : {-1.0, -0.3, 0.0}) EXPECT_NEAR(seg.eval(s), 1.0, 1e-12);
}

TEST(Zeros, WrightRootsAreSimple) {
  const auto traj = wright_run(4.0);
  const auto zs = zeros_of_component(traj, 0, {0.0, 4.0});
  ASSERT_EQ(zs.size(), 2u);
  EXPECT_NEAR(zs[0].t, 1.0, 1e-6);
  EXPECT_NEAR(zs[1].t, 3.0, 1e-6);
  EXPECT_FALSE(zs[0].flat);
  EXPECT_FALSE(zs[1].flat);
}

TEST(Zeros, PositiveAndFlat) {
  const auto one = SegmentFunction::from_function(DomainK(1.0, 0), [](double) { return 1.0; },
                                                  [](double) { return 0.0; }, {}, 4);
  CyclicSystem keep({Coupling{[](double, double u, double v) { return -u + v; }, {}, {}}}, 1);
  const auto flat = integrate(keep, ConstantDelay{1.0}, one, 0.0, 2.0);
  EXPECT_TRUE(zeros_of_component(flat, 0, {0.0, 2.0}).empty());
  EXPECT_TRUE(detect_double_zero(flat, {0.0, 2.0}).empty());

  // x' = 2(t - 1/2) from x(0) = 1/4 is (t - 1/2)^2
  CyclicSystem ramp({Coupling{[](double t, double, double) { return 2 * (t - 0.5); }, {}, {}}}, 1);
  const auto start = SegmentFunction::from_function(DomainK(1.0, 0), [](double) { return 0.25; },
                                                    [](double) { return 0.0; }, {}, 4);
  StepConfig cfg;
  cfg.h_fixed = 0.125;
  const auto sq = integrate(ramp, ConstantDelay{1.0}, start, 0.0, 1.0, cfg);
  const auto zs = zeros_of_component(sq, 0, {0.0, 1.0}, 1e-9);
  ASSERT_FALSE(zs.empty());
  EXPECT_NEAR(zs[0].t, 0.5, 1e-6);
  EXPECT_TRUE(zs[0].flat);
}

TEST(DoubleZero, ReadFromInitialData) {
  const auto sine = SegmentFunction::from_function(DomainK(1.0, 0), [](double s) { return std::sin(kPi * s); },
                                                   [](double s) { return kPi * std::cos(kPi * s); }, {});
  const auto traj = integrate(wright_linear(1.0, 0.0, -1), ConstantDelay{1.0}, sine, 0.0, 0.5);
  const auto ev = detect_double_zero(traj, {0.0, 0.5});
  ASSERT_FALSE(ev.empty());
  EXPECT_NEAR(ev.front().t, 0.0, 1e-9);
  EXPECT_EQ(ev.front().index, 0);
}

TEST(TrajectoryCsv, RoundTrip) {
  const auto traj = wright_run(2.0);
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  std::istringstream is(os.str());
  const auto back = read_trajectory_csv(is);
  EXPECT_EQ(back, trajectory_table(traj));
  std::ostringstream again;
  write_trajectory_table(again, back);
  EXPECT_EQ(again.str(), os.str());
}
