#include <gtest/gtest.h>

#include <cmath>

#include "ddelyap/errors.hpp"
#include "ddelyap/systems.hpp"

using namespace ddelyap;

namespace {

Coupling coupling(CouplingFn f) { return {std::move(f), {}, {}}; }

const std::vector<double> kTimes{0.0, 0.5, 1.0};
const std::vector<double> kVs{-1.0, -0.1, 0.1, 1.0};

}  // namespace

TEST(Systems, EvalRhsScalar) {
  CyclicSystem sys({coupling([](double, double, double v) { return -1.5 * v; })}, -1);
  const std::vector<double> x{2.0};
  const auto out = eval_rhs(sys, 0.0, x, 1.0);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0], -1.5);
}

TEST(Systems, EvalRhsTwoComponents) {
  const int delta = -1;
  CyclicSystem sys({coupling([](double, double u, double v) { return -u + v; }),
                    coupling([delta](double, double u, double v) { return -u + delta * v; })},
                   delta);
  const std::vector<double> x{1.0, 2.0};
  const auto out = eval_rhs(sys, 0.0, x, 3.0);
  EXPECT_DOUBLE_EQ(out[0], 1.0);
  EXPECT_DOUBLE_EQ(out[1], -5.0);
}

TEST(Systems, EquilibriumAtZero) {
  const auto sys = cyclic_saturating(2, {1.0}, {1.0, 1.0, -2.0}, -1, 0.3, 2.0);
  const std::vector<double> zero(3, 0.0);
  for (double v : eval_rhs(sys, 0.7, zero, 0.0)) EXPECT_EQ(v, 0.0);
}

TEST(Systems, NonFiniteThrows) {
  CyclicSystem sys({coupling([](double, double u, double) { return 1.0 / u; })}, 1);
  const std::vector<double> x{0.0};
  EXPECT_THROW(eval_rhs(sys, 0.0, x, 1.0), NumericError);
}

TEST(Feedback, IdentityPositive) {
  CyclicSystem sys({coupling([](double, double, double v) { return v; })}, 1);
  EXPECT_TRUE(check_feedback(sys, kTimes, kVs).pass);
}

TEST(Feedback, WrongSignFailsEverywhere) {
  CyclicSystem sys({coupling([](double, double, double v) { return v; })}, -1);
  const auto rep = check_feedback(sys, kTimes, kVs);
  EXPECT_FALSE(rep.pass);
  EXPECT_EQ(rep.failures, static_cast<int>(kTimes.size() * (kVs.size() + 1)));
}

TEST(Feedback, CubicFailsDerivativeClause) {
  CyclicSystem sys({coupling([](double, double, double v) { return v * v * v; })}, 1);
  // finite-difference oracle of D3 f at (t, 0, 0)
  const double h = 1e-5;
  const double d3 = (std::pow(h, 3) - std::pow(-h, 3)) / (2 * h);
  ASSERT_LT(std::abs(d3), 1e-9);
  const auto rep = check_feedback(sys, kTimes, kVs);
  EXPECT_FALSE(rep.pass);
  ASSERT_TRUE(rep.first_failure.has_value());
  EXPECT_NE(rep.first_failure->clause.find("D3"), std::string::npos);
}

TEST(LinearBound, Constant) {
  CyclicSystem sys({coupling([](double, double, double v) { return -1.5 * v; })}, -1);
  EXPECT_NEAR(check_linear_bound(sys, Box{-2, 2, -3, 3}, kTimes), 1.5, 1e-12);
}

TEST(LinearBound, MaximizedOnAxis) {
  CyclicSystem sys({coupling([](double, double u, double v) { return -u + 2 * v; })}, 1);
  // grid oracle: max of |-u + 2v| / (|u| + |v|) over a 41x41 grid
  double c = 0.0;
  for (int i = 0; i <= 40; ++i)
    for (int j = 0; j <= 40; ++j) {
      const double u = -1 + i / 20.0, v = -1 + j / 20.0;
      if (std::abs(u) + std::abs(v) > 0) c = std::max(c, std::abs(-u + 2 * v) / (std::abs(u) + std::abs(v)));
    }
  EXPECT_NEAR(c, 2.0, 1e-12);
  EXPECT_NEAR(check_linear_bound(sys, Box{}, kTimes), c, 1e-12);
}

TEST(LinearBound, SineAtMostOne) {
  CyclicSystem sys({coupling([](double, double, double v) { return std::sin(v); })}, 1);
  EXPECT_LE(check_linear_bound(sys, Box{}, kTimes), 1.0);
}

TEST(Builtins, KnownAndUnknown) {
  const auto names = builtin_system_names();
  EXPECT_TRUE(std::is_sorted(names.begin(), names.end()));
  EXPECT_NO_THROW(make_builtin_system("wright_linear", {{"alpha", {1.0}}}, -1));
  EXPECT_THROW(make_builtin_system("nope", {}, -1), ConfigError);
}
