#include "ddelyap/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "ddelyap/errors.hpp"

namespace ddelyap {

namespace {

GaussLegendreRule build_rule(int n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

struct SimpsonState {
  const std::function<double(double)>* g;
  int evals = 0;
  bool converged = true;
  double err = 0.0;
};

double simpson_step(SimpsonState& st, double a, double fa, double m, double fm, double b, double fb,
                    double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = (*st.g)(lm);
  const double frm = (*st.g)(rm);
  st.evals += 2;
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol || m - a <= 1e-15 * std::max(1.0, std::abs(a))) {
    if (depth <= 0 && std::abs(delta) > 15.0 * tol) st.converged = false;
    st.err += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_step(st, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(st, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

const GaussLegendreRule& gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: order must be positive");
  static std::mutex mu;
  static std::map<int, GaussLegendreRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
  return it->second;
}

double gauss_legendre_integrate(const std::function<double(double)>& g, double a, double b, int n) {
  const auto& rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rule.weights[i] * g(mid + half * rule.nodes[i]);
  return half * sum;
}

QuadratureResult adaptive_simpson(const std::function<double(double)>& g, double a, double b, double abs_tol,
                                  int max_depth) {
  QuadratureResult res;
  if (a == b) return res;
  SimpsonState st{&g};
  const double m = 0.5 * (a + b);
  const double fa = g(a);
  const double fm = g(m);
  const double fb = g(b);
  st.evals = 3;
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  res.value = simpson_step(st, a, fa, m, fm, b, fb, whole, abs_tol, max_depth);
  res.error_estimate = st.err;
  res.evaluations = st.evals;
  res.converged = st.converged;
  return res;
}

namespace {

double gl_apply(const GaussLegendreRule& rule, const std::function<double(double)>& g, double a, double b, int& evals) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * g(mid + half * rule.nodes[i]);
  evals += static_cast<int>(rule.nodes.size());
  return half * sum;
}

double gl_step(const GaussLegendreRule& rule, const std::function<double(double)>& g, double a, double b,
               double whole, double tol, int depth, QuadratureResult& res) {
  const double m = 0.5 * (a + b);
  const double left = gl_apply(rule, g, a, m, res.evaluations);
  const double right = gl_apply(rule, g, m, b, res.evaluations);
  const double diff = left + right - whole;
  if (std::abs(diff) <= tol || depth <= 0 || m - a <= 1e-15 * std::max(1.0, std::abs(a))) {
    if (depth <= 0 && std::abs(diff) > tol) res.converged = false;
    res.error_estimate += std::abs(diff);
    return left + right;
  }
  return gl_step(rule, g, a, m, left, 0.5 * tol, depth - 1, res) +
         gl_step(rule, g, m, b, right, 0.5 * tol, depth - 1, res);
}

}  // namespace

QuadratureResult adaptive_gauss_legendre(const std::function<double(double)>& g, double a, double b,
                                         double abs_tol, int n, int max_depth) {
  QuadratureResult res;
  if (a == b) return res;
  const auto& rule = gauss_legendre(n);
  const double whole = gl_apply(rule, g, a, b, res.evaluations);
  res.value = gl_step(rule, g, a, b, whole, abs_tol, max_depth, res);
  return res;
}

}  // namespace ddelyap
