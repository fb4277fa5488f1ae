#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ddelyap {

/// f(t, u, v) for one equation of the cyclic system.
using CouplingFn = std::function<double(double t, double u, double v)>;

/// Right-hand side of one equation with optional analytic partials in u
/// (D2) and v (D3). Missing partials fall back to central differences.
struct Coupling {
  CouplingFn f;
  CouplingFn d2;
  CouplingFn d3;
};

enum class DerivativeMode { Analytic, CentralDifference };

/// Unidirectional cyclic system
///   x^i' = f^i(t, x^i, x^{i+1}),   i < N,
///   x^N' = f^N(t, x^N, x^0(η(t))),
/// with feedback sign delta.
class CyclicSystem {
 public:
  CyclicSystem(std::vector<Coupling> equations, int delta, std::string name = {});

  int n_coords() const noexcept { return static_cast<int>(eqs_.size()) - 1; }
  int delta() const noexcept { return delta_; }
  const std::string& name() const noexcept { return name_; }
  DerivativeMode derivative_mode() const noexcept { return mode_; }

  /// Copy that evaluates partials by central differences even where
  /// analytic ones exist.
  CyclicSystem with_finite_differences() const;

  double f(int i, double t, double u, double v) const;
  double d2(int i, double t, double u, double v) const;
  double d3(int i, double t, double u, double v) const;

  /// Throws NumericError carrying the component index on non-finite output.
  std::vector<double> eval_rhs(double t, std::span<const double> state, double delayed_value) const;
  void eval_rhs(double t, std::span<const double> state, double delayed_value, std::span<double> out) const;

 private:
  std::vector<Coupling> eqs_;
  int delta_;
  std::string name_;
  DerivativeMode mode_;
  bool force_fd_ = false;
};

std::vector<double> eval_rhs(const CyclicSystem& sys, double t, std::span<const double> state,
                             double delayed_value);

/// Central-difference derivative with step cbrt(eps) * (1 + |x|).
double central_difference(const std::function<double(double)>& g, double x);

struct FeedbackFailure {
  std::string clause;
  int component = 0;
  double t = 0.0;
  double v = 0.0;
  double value = 0.0;
};

struct FeedbackReport {
  bool pass = true;
  std::optional<FeedbackFailure> first_failure;
  int failures = 0;
  std::size_t checks = 0;
};

/// Samples the feedback hypothesis: v f^i(t,0,v) > 0 and D3 f^i(t,0,0) > 0
/// for i < N, with the extra factor delta for i = N. Derivatives at or below
/// `zeta` count as zero.
FeedbackReport check_feedback(const CyclicSystem& sys, std::span<const double> t_samples,
                              std::span<const double> v_samples, double zeta = 1e-9);

struct Box {
  double u_lo = -1.0;
  double u_hi = 1.0;
  double v_lo = -1.0;
  double v_hi = 1.0;
};

/// Empirical constant C with |f^i(t,u,v)| <= C (|u| + |v|) on a grid over
/// the box (odd grid so that the axes are included).
double check_linear_bound(const CyclicSystem& sys, const Box& box, std::span<const double> t_samples,
                          int grid = 41, double zeta = 1e-9);

// Built-in library -----------------------------------------------------------

/// Parameters are per-equation vectors; a single entry is broadcast.
using ParamMap = std::map<std::string, std::vector<double>>;

/// x' = -mu x - alpha x(η(t)); negative feedback for alpha > 0.
CyclicSystem wright_linear(double alpha, double mu, int delta);

/// f^i = -mu_i u + beta_i v for every i; beta_N is the closing gain.
CyclicSystem cyclic_linear(int n_coords, std::vector<double> mu, std::vector<double> beta, int delta);

/// f^i = -mu_i u + beta_i tanh(v), and the closing gain modulated by
/// (1 + modulation sin(omega t)) to make the system nonautonomous.
CyclicSystem cyclic_saturating(int n_coords, std::vector<double> mu, std::vector<double> beta, int delta,
                               double modulation = 0.0, double omega = 1.0);

/// Builds a registered system by name from a parameter map.
CyclicSystem make_builtin_system(const std::string& name, const ParamMap& params, int delta);

/// Registered built-in system names, sorted.
std::vector<std::string> builtin_system_names();

}  // namespace ddelyap
