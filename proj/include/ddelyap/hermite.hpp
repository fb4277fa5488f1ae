#pragma once

#include <functional>
#include <span>
#include <vector>

namespace ddelyap {

/// Which one-sided derivative to take at a knot.
enum class Side { Left, Right };

/// Cubic Hermite polynomial on [lo, hi] given by endpoint values and
/// endpoint derivatives.
struct HermitePiece {
  double lo = 0.0;
  double hi = 0.0;
  double v0 = 0.0;
  double v1 = 0.0;
  double d0 = 0.0;
  double d1 = 0.0;

  double value(double t) const;
  double derivative(double t) const;

  /// Zeros of the derivative strictly inside (lo, hi), ascending.
  std::vector<double> critical_points() const;

  /// The same cubic, re-expressed on [a, b] (a sub-interval of the piece or
  /// an extrapolated interval).
  HermitePiece restricted(double a, double b) const;
};

/// Contiguous sequence of Hermite pieces: a C^0 function that is C^1 inside
/// each piece. Derivatives may jump at a knot when the adjacent pieces
/// disagree; `Side` selects the one-sided value there.
class HermiteSpline {
 public:
  HermiteSpline() = default;
  explicit HermiteSpline(std::vector<HermitePiece> pieces);

  /// Samples value and derivative of a C^1 function on `pieces` equal
  /// sub-intervals of [lo, hi].
  static HermiteSpline from_function(const std::function<double(double)>& value,
                                     const std::function<double(double)>& derivative,
                                     double lo, double hi, int pieces);

  /// Builds pieces between consecutive knots from knot values and derivatives.
  static HermiteSpline from_knots(std::span<const double> knots, std::span<const double> values,
                                  std::span<const double> derivatives);

  bool empty() const noexcept { return pieces_.empty(); }
  double lo() const;
  double hi() const;
  std::span<const HermitePiece> pieces() const noexcept { return pieces_; }

  double value(double t) const;
  /// One-sided derivative. At the spline ends the only available side is
  /// used regardless of `side`.
  double derivative(double t, Side side = Side::Right) const;

  /// Exact restriction of the spline to [a, b] ⊂ [lo, hi].
  HermiteSpline restricted(double a, double b) const;
  /// Same spline with the argument shifted: result(t) = this(t + offset).
  HermiteSpline shifted(double offset) const;

  /// Index of the piece containing t (right-continuous except at hi).
  std::size_t locate(double t, Side side = Side::Right) const;

 private:
  void check_in_range(double t) const;

  std::vector<HermitePiece> pieces_;
};

}  // namespace ddelyap
