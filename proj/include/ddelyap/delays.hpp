#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "ddelyap/history.hpp"

namespace ddelyap {

/// τ(t) ≡ tau0.
struct ConstantDelay {
  double tau0 = 1.0;
};

/// Prescribed delayed time η(t); r bounds τ from above and tau_min from below.
struct ExplicitEtaDelay {
  std::function<double(double)> eta;
  double r = 1.0;
  double tau_min = 0.0;
};

/// Threshold delay: ∫_{t-τ}^{t} a(x^0(s)) ds = 1 with a ∈ [a_min, a_max].
struct ThresholdDelay {
  std::function<double(double)> a;
  double a_min = 1.0;
  double a_max = 1.0;
};

/// R(x(t), x^0(t - τ), t) with x(t) the full state.
using ImplicitDelayFn = std::function<double(std::span<const double> state, double delayed, double t)>;

/// Implicitly defined delay τ = R(x(t), x^0(t - τ), t). The Lipschitz
/// constants of R in its three arguments and the Lipschitz bound L0 of the
/// history must satisfy the contraction condition; tau_min is a lower bound
/// of R.
struct ImplicitDelay {
  ImplicitDelayFn R;
  double lip_r1 = 0.0;
  double lip_r2 = 0.0;
  double lip_r3 = 0.0;
  double r = 1.0;
  double L0 = 1.0;
  double tau_min = 0.0;
};

/// One of the four delay classes, validated on construction.
class DelayModel {
 public:
  using Variant = std::variant<ConstantDelay, ExplicitEtaDelay, ThresholdDelay, ImplicitDelay>;

  DelayModel(Variant v);  // NOLINT
  template <class T>
    requires(!std::is_same_v<std::decay_t<T>, Variant> && !std::is_same_v<std::decay_t<T>, DelayModel> &&
             std::is_constructible_v<Variant, T>)
  DelayModel(T alternative)  // NOLINT
      : DelayModel(Variant(std::move(alternative))) {}

  const Variant& variant() const noexcept { return v_; }
  std::string kind() const;
  /// Upper bound r of τ.
  double r() const;
  /// Guaranteed lower bound of τ (drives the method-of-steps step cap).
  double tau_lower_bound() const;
  bool state_dependent() const;

 private:
  Variant v_;
};

/// Delayed time at t: τ(t) and η(t) = t - τ(t).
struct DelayedTimeRecord {
  double t = 0.0;
  double tau = 0.0;
  double eta = 0.0;
  int solver_iterations = 0;
  double residual = 0.0;
};

struct DelaySolveOptions {
  /// Absolute tolerance on the threshold integral.
  double threshold_tol = 1e-10;
  /// Absolute tolerance on the implicit fixed point.
  double implicit_tol = 1e-12;
};

/// η(t) for any delay class. `state` is x(t) for the implicit delay; when
/// empty the history's state is used.
DelayedTimeRecord eta_at(const DelayModel& model, double t, const History& history,
                         std::span<const double> state = {}, const DelaySolveOptions& opts = {});

/// Root of F(τ) = ∫_{t-τ}^{t} a(x^0(s)) ds = 1 by a bracketed Newton-bisection
/// on [1/a_max, 1/a_min]; F is assembled piece by piece with adaptive Gauss-Legendre.
DelayedTimeRecord solve_threshold(const std::function<double(double)>& a, double a_min, double a_max,
                                  const History& history, double t, double tol = 1e-10);
DelayedTimeRecord solve_threshold(const ThresholdDelay& model, const History& history, double t,
                                  double tol = 1e-10);

/// Fixed point of s ↦ R(state, x^0(t - s), t) from s0 = r/2, stopped by the
/// a posteriori contraction bound with q = lip_r2 * L0.
DelayedTimeRecord solve_implicit(const ImplicitDelay& model, std::span<const double> state,
                                 const History& history, double t, double tol = 1e-12);

/// Upper bound on the number of fixed-point iterations for tolerance tol.
int implicit_iteration_bound(const ImplicitDelay& model, double tol);

/// η^k(t); η^0(t) = t. CoverageError names the failing iterate.
double iterate_eta(const DelayModel& model, double t, int k, const History& history,
                   const DelaySolveOptions& opts = {});

struct MonotoneReport {
  bool pass = true;
  std::optional<std::size_t> violation_index;  // records[i], records[i+1]
  double t1 = 0.0, eta1 = 0.0, t2 = 0.0, eta2 = 0.0;
  /// Lipschitz bound of τ along solutions for the implicit delay, which is
  /// below 1 exactly when η is guaranteed to be increasing. NaN otherwise.
  double lipschitz_bound = 0.0;
};

MonotoneReport check_eta_monotone(std::span<const DelayedTimeRecord> records,
                                  const DelayModel* model = nullptr);

/// Largest difference quotient of η^k over consecutive grid points, k ≤ k_max.
double estimate_eta_lipschitz(const DelayModel& model, std::span<const double> t_grid, int k_max,
                              const History& history, const DelaySolveOptions& opts = {});

/// Lip τ_1 ≤ lip_r3 / (1 - lip_r2 L0) and Lip τ_2 ≤ (lip_r1 + lip_r2) / (1 - lip_r2 L0).
struct ImplicitLipschitzBounds {
  double tau_t = 0.0;
  double tau_phi = 0.0;
  double eta_increasing = 0.0;
};
ImplicitLipschitzBounds implicit_lipschitz_bounds(const ImplicitDelay& model);

}  // namespace ddelyap
