#pragma once

#include <functional>
#include <optional>
#include <vector>

namespace ddelyap {

struct ThresholdDelay;
struct DelayedTimeRecord;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double t, double slack = 0.0) const { return t >= lo - slack && t <= hi + slack; }
  double length() const { return hi - lo; }
};

/// Read-only view of a solution as seen by the delay solvers: the first
/// component x^0 on its covered interval and, where known, the full state.
class History {
 public:
  virtual ~History() = default;

  /// Interval on which x^0 can be evaluated.
  virtual Interval coverage() const = 0;
  /// x^0(t); throws CoverageError outside coverage().
  virtual double x0(double t) const = 0;
  /// Points in (lo, hi) where x^0 may lose smoothness (dense-output knots).
  virtual std::vector<double> breakpoints(double lo, double hi) const;
  /// Full state (x^0, ..., x^N)(t) when the history knows it.
  virtual std::optional<std::vector<double>> state(double t) const;
  /// Threshold delay at t from a faster route than generic quadrature, if
  /// the history has one; nullopt otherwise.
  virtual std::optional<DelayedTimeRecord> threshold_delay(const ThresholdDelay& m, double t, double tol) const;
};

/// History backed by closed-form functions, mostly for tests and oracles.
class FunctionHistory : public History {
 public:
  FunctionHistory(std::function<double(double)> x0, Interval coverage,
                  std::function<std::vector<double>(double)> state = {});

  Interval coverage() const override { return coverage_; }
  double x0(double t) const override;
  std::optional<std::vector<double>> state(double t) const override;

 private:
  std::function<double(double)> x0_;
  Interval coverage_;
  std::function<std::vector<double>(double)> state_;
};

}  // namespace ddelyap
