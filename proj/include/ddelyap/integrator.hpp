#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ddelyap/delays.hpp"
#include "ddelyap/history.hpp"
#include "ddelyap/segments.hpp"
#include "ddelyap/systems.hpp"

namespace ddelyap {

struct StepConfig {
  /// Local error tolerance per step, mixed absolute/relative: err_i <= tol * max(1, |x_i|).
  double tol = 1e-8;
  double h_max = std::numeric_limits<double>::infinity();
  double h_min = 1e-12;
  /// Fixed step size (no error control) when set.
  std::optional<double> h_fixed;
  /// Steps are capped at kappa times the guaranteed lower bound of τ.
  double kappa = 0.5;
  std::size_t max_steps = 5'000'000;
  DelaySolveOptions delay;
};

struct StepRecord {
  double t = 0.0;  // step start
  double h = 0.0;
  double error_estimate = 0.0;
};

/// Numerical solution on [t0, t_end] with cubic Hermite dense output and the
/// initial segment supplying x^0 on [t0 - r0, t0]. Implements History, so
/// the delay solvers can read it directly.
namespace detail {

// Running integral of a(x^0) at the dense-output nodes, extended on demand.
struct ThresholdIntegral {
  std::mutex mu;
  std::vector<double> nodes;
  std::vector<double> cum;
};

// Owns a ThresholdIntegral; copies start empty.
class ThresholdIntegralSlot {
 public:
  ThresholdIntegralSlot() : p_(std::make_unique<ThresholdIntegral>()) {}
  ThresholdIntegralSlot(const ThresholdIntegralSlot&) : ThresholdIntegralSlot() {}
  ThresholdIntegralSlot(ThresholdIntegralSlot&&) noexcept = default;
  ThresholdIntegralSlot& operator=(const ThresholdIntegralSlot&) {
    p_ = std::make_unique<ThresholdIntegral>();
    return *this;
  }
  ThresholdIntegralSlot& operator=(ThresholdIntegralSlot&&) noexcept = default;
  ThresholdIntegral& get() const { return *p_; }

 private:
  std::unique_ptr<ThresholdIntegral> p_;
};

}  // namespace detail

class Trajectory : public History {
 public:
  Trajectory(const CyclicSystem& sys, DelayModel model, const SegmentFunction& initial, double t0);

  int n_coords() const noexcept { return n_; }
  int delta() const noexcept { return delta_; }
  double t0() const noexcept { return t0_; }
  double t_end() const noexcept { return knots_.back(); }
  /// Delay bound r of the model.
  double r() const { return model_.r(); }
  const DelayModel& model() const noexcept { return model_; }
  const HermiteSpline& initial_continuum() const noexcept { return initial_; }

  Interval coverage() const override;
  double x0(double t) const override;
  std::vector<double> breakpoints(double lo, double hi) const override;
  std::optional<std::vector<double>> state(double t) const override;
  /// Uses a running integral of a(x^0) when `m` is this trajectory's own model.
  std::optional<DelayedTimeRecord> threshold_delay(const ThresholdDelay& m, double t, double tol) const override;
  /// Same, for the trajectory's own threshold model, with x^0 continued past
  /// t_end by `ext` when given.
  std::optional<DelayedTimeRecord> threshold_delay_extended(double t, double tol, const HermitePiece* ext) const;

  /// x^i(t); component 0 reaches back into the initial segment.
  double value(int i, double t) const;
  double derivative(int i, double t, Side side = Side::Right) const;
  /// Interval on which component i can be evaluated.
  Interval component_coverage(int i) const;
  /// Dense output of component i on [lo, hi] as a spline (exact pieces).
  HermiteSpline component_spline(int i, double lo, double hi) const;

  /// Accepted step endpoints, t0 first.
  std::span<const double> knots() const noexcept { return knots_; }
  std::span<const DelayedTimeRecord> delay_log() const noexcept { return delay_log_; }
  std::span<const StepRecord> step_log() const noexcept { return step_log_; }
  /// Knot values x^i(t_k).
  double knot_value(std::size_t k, int i) const { return values_[k * (n_ + 1) + i]; }
  double knot_derivative(std::size_t k, int i) const { return derivs_[k * (n_ + 1) + i]; }

  /// τ(t) and η(t) on the computed solution.
  DelayedTimeRecord delay_at(double t, const DelaySolveOptions& opts = {}) const;
  /// Sum of local error estimates of the steps ending at or before t.
  double error_estimate(double t) const;
  double max_local_error() const;

  /// Appends an accepted step [t_end, t_end + h]; exposed for tests that
  /// build trajectories by hand.
  void append(double h, std::span<const double> x1, std::span<const double> dx1, double error_estimate);
  void set_delay_log(std::vector<DelayedTimeRecord> log) { delay_log_ = std::move(log); }

 private:
  friend Trajectory integrate(const CyclicSystem&, const DelayModel&, const SegmentFunction&, double, double,
                              const StepConfig&);

  std::size_t locate(double t, Side side) const;
  HermitePiece x0_piece(std::size_t j) const;

  int n_ = 0;
  int delta_ = 1;
  DelayModel model_;
  HermiteSpline initial_;  // absolute time [t0 - r0, t0]
  double t0_ = 0.0;
  std::vector<double> knots_;
  std::vector<double> values_;  // (N+1) per knot
  std::vector<double> derivs_;
  std::vector<DelayedTimeRecord> delay_log_;
  std::vector<StepRecord> step_log_;
  std::vector<double> cumulative_error_;  // per knot
  detail::ThresholdIntegralSlot threshold_integral_;
};

/// Method-of-steps integration with an embedded RK4(3) pair.
Trajectory integrate(const CyclicSystem& sys, const DelayModel& model, const SegmentFunction& initial,
                     double t0, double t_end, const StepConfig& cfg = {});

/// x_t: component 0 on [t - r, t] shifted to [-r, 0] and x^i(t), i >= 1.
SegmentFunction segment_at(const Trajectory& traj, double t);

struct ComponentZero {
  double t = 0.0;
  bool flat = false;
};

/// Zeros of x^i on the window from the dense output, refined by bisection.
std::vector<ComponentZero> zeros_of_component(const Trajectory& traj, int i, Interval window,
                                              double zeta = kDefaultZeta);

struct DoubleZero {
  double t = 0.0;
  int index = 0;  // x_t(index) = x_t(index + 1) = 0, x_t(N+1) = x^0(η(t))
};

/// Times t in the window with |x_t(i)| <= zeta and |x_t(i+1)| <= zeta.
std::vector<DoubleZero> detect_double_zero(const Trajectory& traj, Interval window,
                                           double zeta = kDefaultZeta);

/// x_t(i) for i in 0..N+1.
double extended_coordinate(const Trajectory& traj, double t, int i);

/// Trajectory CSV `t,x0,...,xN,tau,eta`, one row per knot, 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

struct TrajectoryTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> metadata;  // leading "# key=value" lines
  friend bool operator==(const TrajectoryTable&, const TrajectoryTable&) = default;
};
TrajectoryTable read_trajectory_csv(std::istream& is);
void write_trajectory_table(std::ostream& os, const TrajectoryTable& table);
TrajectoryTable trajectory_table(const Trajectory& traj);

/// Formats a double with 17 significant digits.
std::string format_double(double x);

}  // namespace ddelyap
