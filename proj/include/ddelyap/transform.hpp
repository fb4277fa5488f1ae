#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ddelyap/integrator.hpp"

namespace ddelyap {

/// a_i(t) and b_i(t) at one time, with the closed-form check of b.
struct Coefficients {
  std::vector<double> a;
  std::vector<double> b;
  /// Largest relative deviation between the Gauss-Legendre value of b_i and
  /// its difference quotient over the indices with |x^{i+1}(t)| > 1e-3
  /// (0 when there are none).
  double b_closed_form_deviation = 0.0;
};

/// a_i(t) = ∫_0^1 D2 f^i(t, h x^i, x^{i+1}) dh and b_i(t) = ∫_0^1 D3 f^i(t, 0, h x^{i+1}) dh
/// where x^{N+1}(t) = x^0(η(t)); see coefficient_a.
Coefficients coefficients_at(const CyclicSystem& sys, const Trajectory& traj, double t, int quad_order = 8);

/// The same coefficients for explicit arguments: difference quotients
/// (f(t,u,v) - f(t,0,v))/u and (f(t,0,v) - f(t,0,0))/v once the argument
/// exceeds 1e-3 in magnitude, Gauss-Legendre below that.
double coefficient_a(const CyclicSystem& sys, int i, double t, double u, double v, int quad_order = 8);
double coefficient_b(const CyclicSystem& sys, int i, double t, double v, int quad_order = 8);

/// Coefficients along a trajectory with the running integrals
/// A_i(t) = ∫_{t_ref}^t a_i, stored at the trajectory knots and completed
/// inside a step by Gauss-Legendre.
class CoefficientTrack {
 public:
  CoefficientTrack(const CyclicSystem& sys, const Trajectory& traj, double t_ref, int quad_order = 8);

  double t_ref() const noexcept { return t_ref_; }
  Interval coverage() const { return {t_ref_, traj_->t_end()}; }
  int n_coords() const noexcept { return traj_->n_coords(); }

  double a(int i, double t) const;
  double b(int i, double t) const;
  double A(int i, double t) const;
  /// c_i = b_i exp(A_{i+1} - A_i), c_N = b_N exp(A_0(η(t)) - A_N); needs η(t) >= t_ref.
  /// Throws InvariantError when c_i <= 0 for i < N or delta c_N <= 0.
  double c(int i, double t) const;
  bool c_defined(int i, double t) const;

 private:
  const CyclicSystem* sys_;
  const Trajectory* traj_;
  double t_ref_;
  int order_;
  std::size_t first_knot_;            // first knot >= t_ref
  std::vector<double> knot_A_;        // (N+1) per knot from first_knot_
};

/// y^i(t) = exp(-A_i(t)) x^i(t) on [t_ref, t_end]. Holds pointers to the
/// system and trajectory, which must outlive it.
class YTrajectory {
 public:
  YTrajectory(const CyclicSystem& sys, const Trajectory& traj, double t_ref, int quad_order = 8);

  const Trajectory& x() const noexcept { return *traj_; }
  const CoefficientTrack& track() const noexcept { return *track_; }
  int n_coords() const noexcept { return traj_->n_coords(); }
  /// Restricted interval on which y is available.
  Interval coverage() const { return track_->coverage(); }

  double value(int i, double t) const;
  double derivative(int i, double t, Side side = Side::Right) const;
  /// y_t(i) for i in 0..N+1 with y_t(N+1) = y^0(η(t)).
  double extended(double t, int i) const;

 private:
  const CyclicSystem* sys_;
  const Trajectory* traj_;
  std::shared_ptr<CoefficientTrack> track_;
};

/// The transformed trajectory; t_ref defaults to the trajectory's t0.
YTrajectory to_y(const CyclicSystem& sys, const Trajectory& traj, std::optional<double> t_ref = std::nullopt,
                 int quad_order = 8);

/// y_t with the continuum part interpolated at the trajectory knots; needs t - r >= t_ref.
SegmentFunction y_segment_at(const YTrajectory& y, double t);

struct ResidualReport {
  double max_residual = 0.0;
  /// Residual divided by exp(-A_i(t)), i.e. measured in units of x; y grows
  /// or decays exponentially, so this is the quantity comparable to tol.
  double max_scaled_residual = 0.0;
  /// Scaled residual divided by max(1, |x^i(t)|, |x^{i+1}(t)|), the mixed
  /// norm the integrator controls; the audit compares this with tol.
  double max_relative_residual = 0.0;
  /// Location of max_relative_residual.
  double t_at_max = 0.0;
  int index_at_max = -1;
  std::size_t checked = 0;
  /// Component N at times with η(t) < t_ref is skipped.
  std::size_t skipped = 0;
};

/// max |y^i'(t) - c_i(t) y^{i+1}(t)| over the grid, y^{N+1}(t) = y^0(η(t)).
ResidualReport residual_linear_system(const YTrajectory& y, std::span<const double> sample_grid);

/// True iff x and y have the same sign at every sample where max(|x|,|y|) > zeta.
bool sign_agreement(const SegmentFunction& xseg, const SegmentFunction& yseg, double zeta = kDefaultZeta);

/// y trajectory in the x trajectory schema with `component_set=y` metadata, at knots >= t_ref.
TrajectoryTable y_trajectory_table(const YTrajectory& y);

}  // namespace ddelyap
