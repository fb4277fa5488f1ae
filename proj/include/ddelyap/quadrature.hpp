#pragma once

#include <functional>
#include <vector>

namespace ddelyap {

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule (Newton iteration on P_n). Rules are cached.
const GaussLegendreRule& gauss_legendre(int n);

/// ∫_a^b g by the n-point Gauss-Legendre rule.
double gauss_legendre_integrate(const std::function<double(double)>& g, double a, double b, int n);

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int evaluations = 0;
  bool converged = true;
};

/// Adaptive Simpson with Richardson correction; `abs_tol` bounds the
/// absolute error over [a, b].
QuadratureResult adaptive_simpson(const std::function<double(double)>& g, double a, double b,
                                  double abs_tol, int max_depth = 40);

/// Adaptive n-point Gauss-Legendre: an interval is accepted when the rule on
/// it and on its two halves agree to within the tolerance share.
QuadratureResult adaptive_gauss_legendre(const std::function<double(double)>& g, double a, double b,
                                         double abs_tol, int n = 8, int max_depth = 30);

}  // namespace ddelyap
